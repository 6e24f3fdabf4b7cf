# -*- coding: utf-8 -*-
"""
Result tables and policy checkpoints on disc
"""
import json
import logging
import os

from OTOffload.policy import PolicyParams

logger = logging.getLogger(__name__)

FORMATS = ('csv', 'json')


def _ensure_dir(out_file):
    """
    Create the parent directory of out_file if needed
    """
    out_dir = os.path.dirname(out_file)
    if out_dir and not os.path.exists(out_dir):
        os.makedirs(out_dir)


def write_table(table, out_file, fmt=None):
    """
    Save a result DataFrame as .csv or .json

    Parameters
    ----------
    table : pandas.DataFrame
    out_file : str
        Output path
    fmt : str, optional
        'csv' or 'json', inferred from the extension when None

    Returns
    -------
    out_file : str
    """
    if fmt is None:
        fmt = os.path.splitext(out_file)[-1].lstrip('.').lower()

    if fmt not in FORMATS:
        raise ValueError('Cannot save results as {}, use one of {}'
                         .format(fmt, FORMATS))

    _ensure_dir(out_file)
    logger.info('Saving {} rows to {}'.format(len(table), out_file))
    if fmt == 'csv':
        table.to_csv(out_file, index=False)
    else:
        table.to_json(out_file, orient='records', double_precision=15)

    return out_file


class Checkpoint:
    """
    JSON checkpoint of policy parameters
    """
    @staticmethod
    def save(theta, out_file):
        """
        Write {"feature_dim": int, "theta": [floats]}

        Parameters
        ----------
        theta : PolicyParams
        out_file : str

        Returns
        -------
        out_file : str
        """
        _ensure_dir(out_file)
        with open(out_file, 'w') as f:
            json.dump(theta.to_dict(), f)

        logger.info('Saved policy checkpoint to {}'.format(out_file))

        return out_file

    @staticmethod
    def load(path):
        """
        Read a checkpoint written by save

        Parameters
        ----------
        path : str

        Returns
        -------
        PolicyParams
        """
        if not os.path.exists(path):
            raise FileNotFoundError('Checkpoint {} does not exist'
                                    .format(path))

        with open(path) as f:
            data = json.load(f)

        return PolicyParams.from_dict(data)
