"""
Run configuration loading
Parses a JSON run description, validates it strictly through the
RunConfigSerializer and builds the RunConfig used by the runner.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from .defaults import setting
from .profiles import CylinderFunction

logger = logging.getLogger(__name__)

# Upper bounds for error checks, lower bounds for order and control checks
DEFAULT_TOLERANCES = {
    'quadrature': 1e-10,
    'wave_order': 1.9,
    'flat': 1e-10,
    'radon_inversion': 1e-3,
    'cauchy_roundtrip': 1e-3,
    'monopole_residual': 1e-9,
    'non_wave_control': 1e-2,
    'asd_order': 1.8,
    'sd_floor': 1e-6,
    'broken_asd_floor': 1e-4,
    'beta_degeneracy': 1e-9,
    'disk_boundary': 1e-8,
    'holomorphy': 1e-8,
    'kappa_control': 1e-3,
    'quotient': 1e-10,
    'equivariance': 1e-12,
    'roundtrip_u': 1e-3,
    'curl_after_gauge': 1e-6,
}


class ConfigError(Exception):
    """Custom exception for unreadable or invalid run configurations"""
    pass


@dataclass(frozen=True)
class GridSpec:
    t_range: List[float]
    x_half: float
    n_points: int
    n_grid: int
    t_values: List[float]
    n_theta: int
    n_v: int
    v_max: float
    n_s: int
    fourier_k: int
    steps: List[float]
    points: List[List[float]]
    box: float
    n_box: int
    n_pairs: int
    n_directions: int
    evolution_time: float


@dataclass(frozen=True)
class RunConfig:
    command: str
    h: CylinderFunction
    grid: GridSpec
    tolerances: Dict[str, float]
    seed: int
    output: Optional[Path] = None
    plane: Optional[str] = None
    monopole: Dict[str, str] = field(default_factory=dict)
    controls: bool = True
    source: Optional[str] = None

    def tolerance(self, name: str) -> float:
        return self.tolerances[name]

    def with_seed(self, seed: Optional[int]) -> 'RunConfig':
        return self if seed is None else replace(self, seed=int(seed))

    def echo(self) -> Dict[str, Any]:
        """Normalized, JSON-ready form of the config (no source path)."""
        return {
            'command': self.command,
            'h_spec': self.h.to_spec(),
            'grid_spec': asdict(self.grid),
            'tolerances': dict(sorted(self.tolerances.items())),
            'seed': self.seed,
            'output': str(self.output) if self.output is not None else None,
            'plane': self.plane,
            'monopole': dict(sorted(self.monopole.items())),
            'controls': self.controls,
        }


def _flatten_errors(errors: Any, prefix: str = '') -> Iterator[str]:
    if isinstance(errors, dict):
        for key, value in errors.items():
            if isinstance(key, int):
                path = f"{prefix}[{key}]"
            else:
                path = f"{prefix}.{key}" if prefix else str(key)
            yield from _flatten_errors(value, path)
    elif isinstance(errors, list):
        if all(isinstance(item, str) for item in errors):
            for item in errors:
                yield f"{prefix or 'config'}: {item}"
        else:
            for index, item in enumerate(errors):
                if item:
                    yield from _flatten_errors(item, f"{prefix}[{index}]")
    else:
        yield f"{prefix or 'config'}: {errors}"


def config_from_dict(data: Any, command: Optional[str] = None, source: str = '<dict>') -> RunConfig:
    """
    Validate a parsed config mapping.

    Args:
        data: Parsed config
        command: Command given on the command line; fills a missing 'command'
            and must agree with a present one
        source: Name used in error messages

    Returns:
        RunConfig

    Raises:
        ConfigError: Naming every invalid field
    """
    from ..serializers import RunConfigSerializer

    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object, got {type(data).__name__}")
    data = dict(data)
    if command is not None:
        given = data.setdefault('command', command)
        if given != command:
            raise ConfigError(f"{source}: config command '{given}' does not match requested command '{command}'")

    serializer = RunConfigSerializer(data=data, known_tolerances=DEFAULT_TOLERANCES)
    if not serializer.is_valid():
        messages = list(_flatten_errors(serializer.errors))
        raise ConfigError(f"{source}: invalid config: " + '; '.join(messages))
    validated = serializer.validated_data

    modes = tuple(item['mode'] for item in validated.get('h_spec', []))
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(validated.get('tolerances', {}))
    output = validated.get('output')
    config = RunConfig(
        command=validated['command'],
        h=CylinderFunction(modes=modes, label='h'),
        grid=GridSpec(**validated['grid_spec']),
        tolerances=tolerances,
        seed=validated.get('seed', setting('TWISTOR_DEFAULT_SEED')),
        output=Path(output) if output else None,
        plane=validated.get('plane'),
        monopole=dict(validated.get('monopole') or {}),
        controls=validated['controls'],
        source=source,
    )
    logger.debug(f"Loaded {config.command} config from {source} with {len(modes)} modes")
    return config


def load_config(path, command: Optional[str] = None) -> RunConfig:
    """
    Read and validate a JSON run config.

    Raises:
        ConfigError: If the file is missing, does not parse (with line and
            column) or fails validation
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e.strerror or e}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}")
    return config_from_dict(data, command=command, source=str(path))
