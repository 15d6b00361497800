"""Template learner plugin for fairweigh"""
from .template import CONFIG_CLASS, Learner, Model

__all__ = ["Learner", "Model", "CONFIG_CLASS"]
