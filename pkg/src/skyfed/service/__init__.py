"""HTTP faces of the catalog node and the federation portal."""

from .node import NodeConfig, create_node_app, load_node_config
from .portal import create_portal_app

__all__ = ["NodeConfig", "create_node_app", "load_node_config", "create_portal_app"]
