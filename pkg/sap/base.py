"""SAP enumeration base module."""

import os
import configparser
from pathlib import Path

DEFAULTS = {
    "enumerate": {
        "threads": "1",
        "moduli": "auto",
        "partitions_per_thread": "4",
    },
    "oracle": {
        "budget": "26",
        "prefix_length": "3",
    },
    "analysis": {
        "precision": "60",
        "k_min": "4",
        "k_max": "8",
        "xc_orders": "2,3,4,5,6",
        "tolerance": "1e-4",
        "min_window_n": "10",
    },
    "checkpoint": {
        "filename": "width-{width:02d}.ckpt",
    },
}


def get_toplevel_path() -> Path:
    """Get project toplevel path."""
    return Path(__file__).parent.parent


def read_config():
    """Read configuration file at module load time."""
    toplevel = get_toplevel_path()
    default_path = os.path.join(toplevel, "conf", "sap.conf")
    filepath = os.environ.get("SAP_CONFIG", default_path)
    sap_config = configparser.ConfigParser()
    sap_config.read_dict(DEFAULTS)
    sap_config.read([filepath])
    return sap_config


def getints(section, option):
    """Read a comma separated list of integers from the config."""
    raw = config.get(section, option)
    return tuple(int(item) for item in raw.split(",") if item.strip())


config = read_config()  # pylint: disable=invalid-name
