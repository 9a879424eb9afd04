"""Short-term heat-demand forecasting benchmark: data pipeline, five forecasters, metrics, resource accounting."""

__version__ = "0.1.0"
