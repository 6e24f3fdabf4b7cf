# -*- coding: utf-8 -*-
"""
Custom Exceptions and Errors for OTOffload
"""


class OTOffloadError(Exception):
    """
    Generic error for OTOffload
    """


class InvalidParametersError(OTOffloadError, ValueError):
    """
    Physical or algorithmic parameters are out of their valid range
    """


class InvalidRateError(OTOffloadError, ValueError):
    """
    Upload rate is not strictly positive and finite
    """


class DivisionUndefinedError(OTOffloadError, ZeroDivisionError):
    """
    Reward normalization against a zero local delay or energy
    """


class EmptyProblemError(OTOffloadError, ValueError):
    """
    Transport problem without tasks or without nodes
    """


class SinkhornUnderflowError(OTOffloadError, FloatingPointError):
    """
    Sinkhorn scaling vectors underflowed, epsilon is likely too small
    """


class MissingPotentialsError(OTOffloadError, ValueError):
    """
    Transport plan does not carry dual potentials
    """


class NonFiniteError(OTOffloadError, FloatingPointError):
    """
    NaN or inf encountered in logits, parameter updates or losses
    """


class ConfigSchemaError(OTOffloadError, ValueError):
    """
    Malformed configuration, message names the offending field
    """
