"""Weighted logistic regression plugin for fairweigh"""
from .logreg import CONFIG_CLASS, Learner, LogRegConfig, Model

__all__ = ["Learner", "Model", "LogRegConfig", "CONFIG_CLASS"]
