"""Black-box adversarial policies against partially observed multi-agent victims."""

__version__ = "0.1.0"
