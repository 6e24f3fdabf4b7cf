# -*- coding: utf-8 -*-
"""
Simulation scenarios: task populations and resolved system constants
"""
from dataclasses import asdict, dataclass, field, replace
import hashlib
import json
import logging
import numpy as np

from OTOffload.exceptions import ConfigSchemaError, InvalidParametersError
from OTOffload.model import SystemParams, Task
from OTOffload.transport import default_nodes

logger = logging.getLogger(__name__)

KB_BITS = 8 * 1024
GCYCLES = 1e9


@dataclass(frozen=True)
class ScenarioConfig:
    """
    How to draw a scenario

    Attributes
    ----------
    num_eds : int
        Number of end devices, one task each
    data_size_kb : tuple
        (lo, hi) uniform task data size in KB, 1 KB = 8192 bits
    cycles_gcycles : tuple | None
        (lo, hi) uniform required cycles in Gcycles
    cycles_per_bit : float | None
        Required cycles per input bit, takes precedence over
        cycles_gcycles when set
    capacity_weights : tuple | None
        (local, edge, cloud) target weights, defaults to node speeds
    params : dict
        SystemParams overrides
    seed : int
    """
    num_eds: int = 100
    data_size_kb: tuple = (100.0, 500.0)
    cycles_gcycles: tuple = (10.0, 20.0)
    cycles_per_bit: float = None
    capacity_weights: tuple = None
    params: dict = field(default_factory=dict)
    seed: int = 0

    AXES = ('data_size_kb', 'cpu_gcycles', 'num_eds')

    def __post_init__(self):
        if int(self.num_eds) != self.num_eds or self.num_eds < 1:
            raise InvalidParametersError('num_eds must be an integer >= 1, '
                                         'got {}'.format(self.num_eds))

        object.__setattr__(self, 'num_eds', int(self.num_eds))
        object.__setattr__(self, 'data_size_kb',
                           self._check_range('data_size_kb',
                                             self.data_size_kb))
        if self.cycles_per_bit is None:
            object.__setattr__(self, 'cycles_gcycles',
                               self._check_range('cycles_gcycles',
                                                 self.cycles_gcycles))
        elif not self.cycles_per_bit > 0:
            raise InvalidParametersError('cycles_per_bit must be > 0, got {}'
                                         .format(self.cycles_per_bit))

        if self.capacity_weights is not None:
            weights = tuple(float(w) for w in self.capacity_weights)
            if len(weights) != 3:
                raise InvalidParametersError('capacity_weights needs (local, '
                                             'edge, cloud), got {}'
                                             .format(weights))
            object.__setattr__(self, 'capacity_weights', weights)

        unknown = set(self.params) - set(SystemParams.field_names())
        if unknown:
            raise ConfigSchemaError('Unknown field scenario.params.{}'
                                    .format(sorted(unknown)[0]))

    @staticmethod
    def _check_range(name, bounds):
        """
        Validate a (lo, hi) pair
        """
        if bounds is None or len(bounds) != 2:
            raise InvalidParametersError('{} must be a [lo, hi] pair, got {}'
                                         .format(name, bounds))

        lo, hi = (float(b) for b in bounds)
        if not 0 < lo <= hi or not np.isfinite(hi):
            raise InvalidParametersError('{} needs 0 < lo <= hi, got {}'
                                         .format(name, bounds))

        return lo, hi

    def system_params(self):
        """
        SystemParams with the configured overrides

        Returns
        -------
        SystemParams
        """
        return SystemParams(**self.params)

    def with_axis(self, axis, value):
        """
        Copy of the config with one sweep axis pinned to a value

        Parameters
        ----------
        axis : str
            'data_size_kb', 'cpu_gcycles' or 'num_eds'
        value : float

        Returns
        -------
        ScenarioConfig
        """
        if axis == 'data_size_kb':
            return replace(self, data_size_kb=(value, value))
        elif axis == 'cpu_gcycles':
            return replace(self, cycles_gcycles=(value, value),
                           cycles_per_bit=None)
        elif axis == 'num_eds':
            return replace(self, num_eds=value)

        raise InvalidParametersError('axis must be one of {}, got {}'
                                     .format(self.AXES, axis))


@dataclass(frozen=True)
class Scenario:
    """
    Tasks, system constants and compute nodes of one simulation
    """
    tasks: tuple
    params: SystemParams
    nodes: tuple
    num_eds: int
    seed: int

    def __repr__(self):
        return '{} with {} tasks (seed {})'.format(self.__class__.__name__,
                                                   len(self.tasks), self.seed)


def generate_scenario(config=None):
    """
    Draw tasks from the configured distributions

    Parameters
    ----------
    config : ScenarioConfig, optional

    Returns
    -------
    Scenario
    """
    if config is None:
        config = ScenarioConfig()

    params = config.system_params()
    rng = np.random.default_rng(config.seed)
    lo, hi = config.data_size_kb
    bits = rng.uniform(lo, hi, config.num_eds) * KB_BITS
    if config.cycles_per_bit is not None:
        cycles = bits * config.cycles_per_bit
    else:
        lo, hi = config.cycles_gcycles
        cycles = rng.uniform(lo, hi, config.num_eds) * GCYCLES

    tasks = tuple(Task(i, float(c), float(b))
                  for i, (c, b) in enumerate(zip(cycles, bits)))
    nodes = default_nodes(params, config.capacity_weights)
    logger.debug('Generated {} tasks with seed {}'.format(len(tasks),
                                                          config.seed))

    return Scenario(tasks, params, nodes, config.num_eds, config.seed)


def scenario_hash(scenario):
    """
    sha256 of the canonical JSON form of a scenario

    Parameters
    ----------
    scenario : Scenario

    Returns
    -------
    str
        Hex digest
    """
    canonical = {
        'tasks': [[str(t.id), t.cycles_required, t.data_size_bits]
                  for t in scenario.tasks],
        'params': asdict(scenario.params),
        'nodes': [[int(n.kind), n.speed_hz, n.capacity_weight]
                  for n in scenario.nodes],
        'num_eds': scenario.num_eds,
        'seed': scenario.seed}
    payload = json.dumps(canonical, sort_keys=True, separators=(',', ':'))

    return hashlib.sha256(payload.encode('utf-8')).hexdigest()
