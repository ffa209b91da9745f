"""
--------------------------------------------------------------------------------
PURPOSE:     Line lexer for edlab experiment files. Produces one token per
             `key = value` line, tagged with its section and line number.
             Values stay raw text; ValueStructurer parses them.

HANDLED EDGE CASES:
1.  TABS: treated as spaces.
2.  SECTIONS: `[name]` headers, case-insensitive, surrounding blanks ignored.
3.  INLINE COMMENTS: '#' or ';' start a comment only outside quotes and when
    preceded by whitespace, so `label = "run #2"` keeps its hash.
4.  ESCAPED QUOTES: \" inside double quotes does not close the string.
5.  PURE COMMENTS AND BLANK LINES: skipped.
6.  ORPHAN KEYS: a key before any section header is an error.
7.  DUPLICATES: a key repeated within a section is an error naming both lines.
--------------------------------------------------------------------------------
"""
import re
from dataclasses import dataclass
from typing import Dict, List, Tuple

from edlab.errors import ConfigError


@dataclass(frozen=True)
class ConfigToken:
    line: int
    section: str
    key: str
    raw: str

    @property
    def path(self) -> str:
        return f"{self.section}.{self.key}"


class ConfigLexer:
    COMMENT_CHARS = "#;"

    def __init__(self):
        self.section_pattern = re.compile(r'^\[\s*([A-Za-z_][\w-]*)\s*\]$')
        self.kv_pattern = re.compile(r'^([A-Za-z_][\w-]*)\s*=\s*(.*)$')

    def _find_comment_split(self, text: str) -> int:
        in_double_quote = False
        in_single_quote = False
        escaped = False
        for i, char in enumerate(text):
            if escaped:
                escaped = False
                continue
            if char == '\\':
                escaped = True
                continue
            if char == '"' and not in_single_quote:
                in_double_quote = not in_double_quote
            elif char == "'" and not in_double_quote:
                in_single_quote = not in_single_quote
            if char in self.COMMENT_CHARS and not in_double_quote and not in_single_quote:
                if i == 0 or text[i - 1].isspace():
                    return i
        return -1

    def strip_comment(self, line: str) -> str:
        line = line.replace('\t', ' ')
        split = self._find_comment_split(line)
        if split != -1:
            line = line[:split]
        return line.strip()

    def process_string(self, text: str) -> List[ConfigToken]:
        tokens: List[ConfigToken] = []
        seen: Dict[Tuple[str, str], int] = {}
        section = None

        for lineno, raw_line in enumerate(text.splitlines(), start=1):
            content = self.strip_comment(raw_line)
            if not content:
                continue

            header = self.section_pattern.match(content)
            if header:
                section = header.group(1).lower()
                continue

            match = self.kv_pattern.match(content)
            if not match:
                where = f"{section}" if section else "<config>"
                raise ConfigError(where, f"cannot parse {content!r}; expected 'key = value'", line=lineno)

            key, value = match.group(1), match.group(2).strip()
            if section is None:
                raise ConfigError(key, "key appears before any [section] header", line=lineno)
            if not value:
                raise ConfigError(f"{section}.{key}", "missing value", line=lineno)
            if (section, key) in seen:
                raise ConfigError(f"{section}.{key}",
                                  f"duplicate key (first set on line {seen[(section, key)]})", line=lineno)
            seen[(section, key)] = lineno
            tokens.append(ConfigToken(lineno, section, key, value))

        return tokens
