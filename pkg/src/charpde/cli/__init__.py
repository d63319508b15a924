from charpde.cli.config import ConfigError, RunConfig, parse_config, render_config
from charpde.cli.main import main

__all__ = ["ConfigError", "RunConfig", "main", "parse_config", "render_config"]
