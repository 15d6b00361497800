"""Exact single-feature threshold plugin for fairweigh"""
from .threshold import CONFIG_CLASS, Learner, Model, ThresholdConfig

__all__ = ["Learner", "Model", "ThresholdConfig", "CONFIG_CLASS"]
