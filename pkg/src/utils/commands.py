"""Command definitions loader."""

import json
from pathlib import Path
from typing import Dict, List, Optional

from .logger import get_logger

logger = get_logger(__name__)


class CommandLoader:
    """Load and format the command-line verbs."""

    @staticmethod
    def load_commands(commands_file: Optional[Path] = None) -> List[Dict[str, str]]:
        """Load commands from JSON file.

        Args:
            commands_file: Path to commands.json file

        Returns:
            List of command dicts with 'command', 'scenario' and 'description' keys
        """
        if commands_file is None:
            # Default to src directory
            commands_file = Path(__file__).parent.parent / "commands.json"

        try:
            with open(commands_file, "r") as f:
                commands = json.load(f)
            logger.debug("commands_loaded", count=len(commands))
            return commands
        except (OSError, json.JSONDecodeError) as e:
            logger.error("commands_load_failed", error=str(e))
            return []

    @staticmethod
    def scenario_for(commands: List[Dict[str, str]], verb: str) -> str:
        """Scenario name behind a verb; verbs without a mapping name their scenario."""
        for cmd in commands:
            if cmd["command"] == verb:
                return cmd.get("scenario", verb)
        return verb

    @staticmethod
    def format_help_message(commands: List[Dict[str, str]]) -> str:
        """Format commands into an aligned help table.

        Args:
            commands: List of command definitions

        Returns:
            Plain-text help message
        """
        if not commands:
            return ""
        width = max(len(cmd["command"]) for cmd in commands)
        lines = ["commands:"]
        for cmd in commands:
            lines.append(f"  {cmd['command']:<{width}}  {cmd['description']}")
        return "\n".join(lines)
