"""Preference-elicitation-augmented Bayesian optimization with Bayesian
neural network surrogates."""

__version__ = "0.1.0"
