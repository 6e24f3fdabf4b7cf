# -*- coding: utf-8 -*-
"""
Cloud-edge-end system model: upload rate, delay, energy, cost and reward
"""
from dataclasses import dataclass, fields
from enum import IntEnum
import logging
import numpy as np

from OTOffload.exceptions import (DivisionUndefinedError,
                                  InvalidParametersError, InvalidRateError)

logger = logging.getLogger(__name__)


class OffloadDecision(IntEnum):
    """
    Where a task is executed, serialized as -1, 0, 1
    """
    LOCAL = -1
    EDGE = 0
    CLOUD = 1

    @property
    def index(self):
        """
        Position of the decision in the fixed (Local, Edge, Cloud) order

        Returns
        -------
        int
        """
        return int(self) + 1

    @classmethod
    def from_index(cls, index):
        """
        Decision at the given position of the (Local, Edge, Cloud) order

        Parameters
        ----------
        index : int
            0, 1 or 2

        Returns
        -------
        OffloadDecision
        """
        return ACTIONS[int(index)]


ACTIONS = (OffloadDecision.LOCAL, OffloadDecision.EDGE, OffloadDecision.CLOUD)


@dataclass(frozen=True)
class Task:
    """
    A single offloadable unit of work

    Attributes
    ----------
    id : int | str
        Opaque identifier
    cycles_required : float
        CPU cycles needed to finish the task
    data_size_bits : float
        Input data that must be uploaded to offload the task
    """
    id: object
    cycles_required: float
    data_size_bits: float

    def __post_init__(self):
        for name in ('cycles_required', 'data_size_bits'):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                msg = ('Task {} {} must be positive and finite, got {}'
                       .format(self.id, name, value))
                raise InvalidParametersError(msg)


@dataclass(frozen=True)
class SystemParams:
    """
    Physical constants of the communication, delay and energy models

    Defaults follow the desk-scale simulation set-up: 1/10/100 GHz nodes,
    a 50 MHz band shared by 50 channels, 0.1 W upload power and 0.5 W local
    compute power. The noise PSD interprets -100 dBm as total noise over the
    full band: 1e-13 W / 5e7 Hz = 2e-21 W/Hz.
    """
    bandwidth_hz: float = 5e7
    num_channels: int = 50
    tx_power_w: float = 0.1
    compute_power_w: float = 0.5
    idle_power_w: float = 0.05
    channel_gain: float = 1e-3
    noise_psd_w_per_hz: float = 2e-21
    f_end_hz: float = 1e9
    f_edge_hz: float = 1e10
    f_cloud_hz: float = 1e11
    backhaul_rate_bps: float = 1e8
    weight_delay: float = 0.5
    weight_energy: float = 0.5

    POSITIVE = ('bandwidth_hz', 'tx_power_w', 'compute_power_w',
                'idle_power_w', 'noise_psd_w_per_hz', 'f_end_hz',
                'f_edge_hz', 'f_cloud_hz', 'backhaul_rate_bps')

    def __post_init__(self):
        for name in self.POSITIVE:
            value = getattr(self, name)
            if np.isnan(value) or value <= 0:
                raise InvalidParametersError('{} must be > 0, got {}'
                                             .format(name, value))

        if not np.isfinite(self.channel_gain) or self.channel_gain < 0:
            raise InvalidParametersError('channel_gain must be >= 0, got {}'
                                         .format(self.channel_gain))

        if int(self.num_channels) != self.num_channels \
                or self.num_channels < 1:
            raise InvalidParametersError('num_channels must be a positive '
                                         'integer, got {}'
                                         .format(self.num_channels))

        weights = (self.weight_delay, self.weight_energy)
        if min(weights) < 0 or abs(sum(weights) - 1) > 1e-9:
            raise InvalidParametersError('weight_delay and weight_energy must '
                                         'be >= 0 and sum to 1, got {}'
                                         .format(weights))

    @classmethod
    def field_names(cls):
        """
        Names of all configurable parameters

        Returns
        -------
        list
        """
        return [f.name for f in fields(cls)]

    def node_speed(self, decision):
        """
        Compute speed of the node that executes the given decision

        Parameters
        ----------
        decision : OffloadDecision

        Returns
        -------
        float
            cycles/s
        """
        speeds = {OffloadDecision.LOCAL: self.f_end_hz,
                  OffloadDecision.EDGE: self.f_edge_hz,
                  OffloadDecision.CLOUD: self.f_cloud_hz}

        return speeds[OffloadDecision(decision)]


@dataclass(frozen=True)
class CostBreakdown:
    """
    Delay, energy and dimensionless cost of executing one task

    normalized_cost = weight_delay * T / T_local + weight_energy * E / E_local
    """
    delay_s: float
    energy_j: float
    normalized_cost: float


def upload_rate(params, offloader_count):
    """
    Shannon upload rate when the band is split equally between offloaders

    Parameters
    ----------
    params : SystemParams
        System constants
    offloader_count : int
        Number of end devices uploading at the same time, >= 1

    Returns
    -------
    rate : float
        Upload rate in bits/s
    """
    if offloader_count < 1:
        raise InvalidParametersError('offloader_count must be >= 1, got {}'
                                     .format(offloader_count))

    w_alloc = params.bandwidth_hz / offloader_count
    with np.errstate(over='ignore', invalid='ignore'):
        snr = (params.tx_power_w * params.channel_gain
               / (w_alloc * params.noise_psd_w_per_hz))
        rate = w_alloc * np.log2(1 + snr)

    if not np.isfinite(rate):
        raise InvalidParametersError('Upload rate is not finite for {} '
                                     'offloaders, check bandwidth, power, '
                                     'gain and noise'.format(offloader_count))

    return float(rate)


def _check_rate(r_u):
    """
    Raise InvalidRateError unless r_u is positive and finite
    """
    if not np.isfinite(r_u) or r_u <= 0:
        raise InvalidRateError('Upload rate must be > 0, got {}'.format(r_u))


def normalize_cost(delay, energy, task, params):
    """
    Weighted cost of (delay, energy) relative to local execution
    """
    t_local = task.cycles_required / params.f_end_hz
    e_local = params.compute_power_w * t_local

    return (params.weight_delay * delay / t_local
            + params.weight_energy * energy / e_local)


def local_cost(task, params):
    """
    Cost of executing the task on the end device

    Parameters
    ----------
    task : Task
    params : SystemParams

    Returns
    -------
    CostBreakdown
        normalized_cost is 1 by construction
    """
    delay = task.cycles_required / params.f_end_hz
    energy = params.compute_power_w * delay

    return CostBreakdown(delay, energy, 1.0)


def edge_cost(task, params, r_u):
    """
    Cost of uploading the task and executing it on the edge server

    Parameters
    ----------
    task : Task
    params : SystemParams
    r_u : float
        Upload rate in bits/s

    Returns
    -------
    CostBreakdown
    """
    _check_rate(r_u)
    upload = task.data_size_bits / r_u
    compute = task.cycles_required / params.f_edge_hz
    delay = upload + compute
    energy = params.tx_power_w * upload + params.idle_power_w * compute

    return CostBreakdown(delay, energy,
                         normalize_cost(delay, energy, task, params))


def cloud_cost(task, params, r_u):
    """
    Cost of uploading the task, forwarding it over the backhaul and
    executing it on the cloud server

    Parameters
    ----------
    task : Task
    params : SystemParams
    r_u : float
        Upload rate in bits/s

    Returns
    -------
    CostBreakdown
    """
    _check_rate(r_u)
    upload = task.data_size_bits / r_u
    backhaul = task.data_size_bits / params.backhaul_rate_bps
    compute = task.cycles_required / params.f_cloud_hz
    delay = upload + backhaul + compute
    energy = (params.tx_power_w * upload
              + params.idle_power_w * (backhaul + compute))

    return CostBreakdown(delay, energy,
                         normalize_cost(delay, energy, task, params))


def decision_cost(task, decision, params, r_u):
    """
    Cost of the given offloading decision for a task

    Parameters
    ----------
    task : Task
    decision : OffloadDecision
    params : SystemParams
    r_u : float
        Upload rate in bits/s, ignored for local execution

    Returns
    -------
    CostBreakdown
    """
    decision = OffloadDecision(decision)
    if decision == OffloadDecision.LOCAL:
        return local_cost(task, params)
    elif decision == OffloadDecision.EDGE:
        return edge_cost(task, params, r_u)

    return cloud_cost(task, params, r_u)


def reward(local, offloaded, params):
    """
    Relative delay and energy saving of an offloading decision

    Parameters
    ----------
    local : CostBreakdown
        Cost of executing the task locally
    offloaded : CostBreakdown
        Cost of the decision that was taken
    params : SystemParams
        Supplies the delay/energy weights

    Returns
    -------
    float
        At most weight_delay + weight_energy = 1, may be negative
    """
    if local.delay_s <= 0 or local.energy_j <= 0:
        raise DivisionUndefinedError('Local delay and energy must be > 0 to '
                                     'normalize the reward, got {} s and {} J'
                                     .format(local.delay_s, local.energy_j))

    delay_gain = (local.delay_s - offloaded.delay_s) / local.delay_s
    energy_gain = (local.energy_j - offloaded.energy_j) / local.energy_j

    return (params.weight_delay * delay_gain
            + params.weight_energy * energy_gain)


def decision_costs(cycles, bits, params, r_u):
    """
    Vectorized delay, energy and normalized cost of every decision

    Parameters
    ----------
    cycles : ndarray
        (N, ) required CPU cycles
    bits : ndarray
        (N, ) input data sizes in bits
    params : SystemParams
    r_u : float | ndarray
        Upload rate(s) in bits/s

    Returns
    -------
    delay : ndarray
        (N, 3) seconds, columns ordered Local, Edge, Cloud
    energy : ndarray
        (N, 3) joules
    cost : ndarray
        (N, 3) normalized cost, Local column is exactly 1
    """
    cycles = np.asarray(cycles, dtype=float)
    bits = np.asarray(bits, dtype=float)
    r_u = np.broadcast_to(np.asarray(r_u, dtype=float), cycles.shape)
    if np.any(~np.isfinite(r_u) | (r_u <= 0)):
        raise InvalidRateError('Upload rates must be > 0')

    upload = bits / r_u
    backhaul = bits / params.backhaul_rate_bps
    t_local = cycles / params.f_end_hz
    t_edge = cycles / params.f_edge_hz
    t_cloud = cycles / params.f_cloud_hz

    delay = np.column_stack([t_local, upload + t_edge,
                             upload + backhaul + t_cloud])
    energy = np.column_stack(
        [params.compute_power_w * t_local,
         params.tx_power_w * upload + params.idle_power_w * t_edge,
         params.tx_power_w * upload
         + params.idle_power_w * (backhaul + t_cloud)])

    cost = (params.weight_delay * delay / delay[:, :1]
            + params.weight_energy * energy / energy[:, :1])
    cost[:, 0] = 1.0

    return delay, energy, cost
