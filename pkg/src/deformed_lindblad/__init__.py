"""Deformed Lindblad - затухающий f-/q-деформированный осциллятор в усеченном базисе Фока."""

__version__ = "0.1.0"
