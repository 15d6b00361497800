"""Weighted CART decision tree plugin for fairweigh"""
from .tree import CONFIG_CLASS, Learner, Model, TreeConfig

__all__ = ["Learner", "Model", "TreeConfig", "CONFIG_CLASS"]
