#!/usr/bin/env python3
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from edlab.config.lexer import ConfigToken
from edlab.errors import ConfigError


class ValueStructurer:
    """Parses raw config values as YAML 1.2 flow scalars or sequences."""

    def __init__(self):
        self.yaml = YAML(typ="safe", pure=True)

    def parse_value(self, raw: str):
        """Attempts to parse; returns (is_valid, value_or_error)"""
        try:
            return True, self.yaml.load(raw)
        except YAMLError as e:
            return False, e

    def structure(self, token: ConfigToken):
        ok, value = self.parse_value(token.raw)
        if not ok:
            mark = getattr(value, "problem_mark", None)
            col = f" at column {mark.column + 1}" if mark is not None else ""
            raise ConfigError(token.path, f"unreadable value {token.raw!r}{col}", line=token.line)
        if isinstance(value, dict):
            raise ConfigError(token.path, "mappings are not allowed as values", line=token.line)
        return value
