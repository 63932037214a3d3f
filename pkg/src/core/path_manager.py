"""
Centralized path management for the journey planner.
"""
import datetime
import json
import logging
import os
import shutil
from typing import Any, Dict, Optional

from .errors import ValidationError

logger = logging.getLogger(__name__)

NETWORK_ENV_VAR = 'BBTIME_NET'
CONFIG_ENV_VAR = 'BBTIME_CONFIG_DIR'


class PathManager:
    """Centralized path management for consistent file handling"""

    def __init__(self, base_dir: Optional[str] = None):
        self.base_dir = base_dir or os.getcwd()
        self.config_dir = os.environ.get(CONFIG_ENV_VAR) or os.path.join(self.base_dir, "config")
        self.output_base_dir = os.path.join(self.base_dir, "out")

        # Current run info
        self.current_run_id: Optional[str] = None
        self.current_output_dir: Optional[str] = None

    def create_run(self, run_name: Optional[str] = None) -> str:
        """Create a timestamped output directory for one command run"""
        if not run_name:
            timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
            run_name = f"run_{timestamp}"

        self.current_run_id = run_name
        self.current_output_dir = os.path.join(self.output_base_dir, run_name)
        os.makedirs(self.current_output_dir, exist_ok=True)

        logger.debug("Created run '%s' at %s", run_name, self.current_output_dir)
        return self.current_output_dir

    def get_run_dir(self) -> str:
        """Get current run directory"""
        if not self.current_output_dir:
            return self.create_run()
        return self.current_output_dir

    def get_report_path(self, report_name: str, extension: str = "txt") -> str:
        """Get the full path for a report file in the current run"""
        return os.path.join(self.get_run_dir(), f"{report_name}.{extension}")

    def get_settings_file_path(self) -> str:
        """Get the settings file path"""
        return os.path.join(self.config_dir, "settings.json")

    def resolve_network_file(self, explicit: Optional[str] = None) -> str:
        """
        Resolve which network file a command works on.

        Precedence: explicit argument, BBTIME_NET, last network used.
        """
        candidate = explicit or os.environ.get(NETWORK_ENV_VAR)
        if not candidate:
            last = self.get_last_network()
            candidate = last.get('path') if last else None
        if not candidate:
            raise ValidationError(f"No network file given and {NETWORK_ENV_VAR} is not set")
        return candidate

    def cleanup_old_runs(self, keep_count: int = 5):
        """Clean up old run directories, keeping only the most recent ones"""
        try:
            if not os.path.exists(self.output_base_dir):
                return

            run_dirs = []
            for item in os.listdir(self.output_base_dir):
                item_path = os.path.join(self.output_base_dir, item)
                if os.path.isdir(item_path) and item.startswith("run_"):
                    run_dirs.append((item, item_path, os.path.getctime(item_path)))

            # Newest first
            run_dirs.sort(key=lambda x: x[2], reverse=True)

            for i, (name, path, _) in enumerate(run_dirs):
                if i >= keep_count:
                    logger.debug("Cleaning up old run: %s", name)
                    shutil.rmtree(path, ignore_errors=True)

        except OSError as e:
            logger.warning("Error cleaning up old runs: %s", e)

    def save_last_network(self, network_info: Dict[str, Any]):
        """Save information about the last network file used"""
        try:
            os.makedirs(self.config_dir, exist_ok=True)
            last_network_file = os.path.join(self.config_dir, "last_network.json")
            with open(last_network_file, 'w') as f:
                json.dump(network_info, f, indent=4)
            logger.debug("Saved last network info to %s", last_network_file)
        except OSError as e:
            logger.warning("Error saving last network info: %s", e)

    def get_last_network(self) -> Optional[Dict[str, Any]]:
        """Get information about the last network file used"""
        last_network_file = os.path.join(self.config_dir, "last_network.json")
        if not os.path.exists(last_network_file):
            return None
        try:
            with open(last_network_file, 'r') as f:
                return json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("Error loading last network info: %s", e)
            return None


# Global instance
path_manager = PathManager()
