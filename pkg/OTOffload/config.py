# -*- coding: utf-8 -*-
"""
JSON run configuration: sections, defaults and schema validation
"""
from dataclasses import dataclass, field, fields, replace
import json
import logging
import os

from OTOffload.exceptions import ConfigSchemaError
from OTOffload.experiment import SweepSpec
from OTOffload.scenario import ScenarioConfig
from OTOffload.trainer import AnnealingSchedule, TrainConfig

logger = logging.getLogger(__name__)

SECTIONS = {'scenario': ScenarioConfig,
            'train': TrainConfig,
            'schedule': AnnealingSchedule,
            'sweep': SweepSpec}


@dataclass(frozen=True)
class RunConfig:
    """
    Everything a CLI command needs, one section per configured object
    """
    seed: int = 0
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    schedule: AnnealingSchedule = field(default_factory=AnnealingSchedule)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def with_seed(self, seed):
        """
        Copy with the scenario and training seeds set to seed

        Parameters
        ----------
        seed : int

        Returns
        -------
        RunConfig
        """
        seed = int(seed)
        return replace(self, seed=seed,
                       scenario=replace(self.scenario, seed=seed),
                       train=replace(self.train, seed=seed))


def _build_section(name, data):
    """
    Instantiate one config section, naming the offending field on failure
    """
    cls = SECTIONS[name]
    if not isinstance(data, dict):
        raise ConfigSchemaError('Config section "{}" must be an object, got '
                                '{}'.format(name, type(data).__name__))

    allowed = [f.name for f in fields(cls)]
    for key in data:
        if key not in allowed:
            raise ConfigSchemaError('Unknown field {}.{}, expected one of {}'
                                    .format(name, key, allowed))

    if name == 'scenario' and not isinstance(data.get('params', {}), dict):
        raise ConfigSchemaError('Field scenario.params must be an object')

    try:
        section = cls(**data)
    except ConfigSchemaError:
        raise
    except (TypeError, ValueError) as ex:
        raise ConfigSchemaError('Invalid value for {}: {}'
                                .format(_field_path(name, data, ex), ex)) \
            from ex

    if name == 'scenario':
        _check_params(section)

    return section


def _field_path(prefix, data, ex):
    """
    Dotted path of the first field named in the error message
    """
    bad = [k for k in data if k in str(ex)]

    return '{}.{}'.format(prefix, bad[0]) if bad else prefix


def _check_params(scenario):
    """
    Build the system constants so bad values fail at load time
    """
    try:
        scenario.system_params()
    except (TypeError, ValueError) as ex:
        path = _field_path('scenario.params', scenario.params, ex)
        raise ConfigSchemaError('Invalid value for {}: {}'
                                .format(path, ex)) from ex


def load_config(source=None):
    """
    Load and validate a run configuration

    Parameters
    ----------
    source : str | dict, optional
        Path to a .json file or an already parsed mapping, defaults when
        None

    Returns
    -------
    RunConfig
    """
    if source is None:
        data = {}
    elif isinstance(source, dict):
        data = source
    else:
        if not os.path.exists(source):
            raise FileNotFoundError('Config file {} does not exist'
                                    .format(source))

        logger.debug('Loading config from {}'.format(source))
        with open(source) as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as ex:
                raise ConfigSchemaError('{} is not valid JSON: {}'
                                        .format(source, ex)) from ex

    if not isinstance(data, dict):
        raise ConfigSchemaError('Config root must be an object')

    for key in data:
        if key != 'seed' and key not in SECTIONS:
            raise ConfigSchemaError('Unknown field {}, expected seed or one '
                                    'of {}'.format(key, list(SECTIONS)))

    sections = {name: _build_section(name, data[name])
                for name in SECTIONS if name in data}
    config = RunConfig(**sections)

    if 'seed' in data:
        seed = data['seed']
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ConfigSchemaError('Field seed must be a nonnegative '
                                    'integer, got {}'.format(seed))
        config = config.with_seed(seed)

    return config
