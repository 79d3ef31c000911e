"""Line-oriented config format shared by reservoir descriptions and run files.

A file is a sequence of ``[section]`` blocks. Inside a block, lines are
either ``key = value`` pairs or bare comma-separated data rows; the two may
not repeat a key. ``#`` starts a comment and blank lines are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigInvalid


@dataclass
class Section:
    name: str
    keys: dict[str, str] = field(default_factory=dict)
    rows: list[list[str]] = field(default_factory=list)


def parse_blocks(text: str, source: str = "<config>") -> dict[str, Section]:
    """Parse block-structured config text into sections.

    Raises ConfigInvalid with the offending line number on duplicate keys,
    duplicate sections, or content outside any section.
    """
    sections: dict[str, Section] = {}
    current: Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if not name:
                raise ConfigInvalid(f"{source}:{lineno}: empty section name")
            if name in sections:
                raise ConfigInvalid(f"{source}:{lineno}: duplicate section [{name}]")
            current = Section(name)
            sections[name] = current
            continue
        if current is None:
            raise ConfigInvalid(f"{source}:{lineno}: content before any [section]")
        if "=" in line:
            key, _, value = line.partition("=")
            key = key.strip().lower()
            if not key:
                raise ConfigInvalid(f"{source}:{lineno}: missing key before '='")
            if key in current.keys:
                raise ConfigInvalid(f"{source}:{lineno}: duplicate key '{key}'")
            current.keys[key] = value.strip()
        else:
            current.rows.append([cell.strip() for cell in line.split(",")])
    return sections


def get_float(section: Section, key: str, source: str = "<config>") -> float:
    try:
        return float(section.keys[key])
    except KeyError:
        raise ConfigInvalid(f"{source}: [{section.name}] is missing '{key}'") from None
    except ValueError:
        raise ConfigInvalid(
            f"{source}: [{section.name}] {key} = {section.keys[key]!r} is not a number"
        ) from None


def require_section(sections: dict[str, Section], name: str, source: str = "<config>") -> Section:
    if name not in sections:
        raise ConfigInvalid(f"{source}: missing required section [{name}]")
    return sections[name]
