import copy
import glob
import os
import re
from typing import Any, Dict, Optional

import yaml

from greenfde.core.exceptions import ConfigError

_ENV_PATTERN = re.compile(r"\$\{(\w+)\}")


class LineDict(dict):
    """Mapping that remembers where it (and each of its keys) came from."""

    def __init__(self, *args, **kwargs) -> None:
        super().__init__(*args, **kwargs)
        self.source: Optional[str] = None
        self.line: Optional[int] = None
        self.key_lines: Dict[Any, int] = {}

    def line_of(self, key: Any) -> Optional[int]:
        return self.key_lines.get(key, self.line)


def line_of(data: Any, key: Any = None) -> Optional[int]:
    if isinstance(data, LineDict):
        return data.line if key is None else data.line_of(key)
    return None


def source_of(data: Any) -> Optional[str]:
    return data.source if isinstance(data, LineDict) else None


def _expand_env(content: str) -> str:
    """Expand ${VAR_NAME} from environment in the given content string."""

    def repl(match):
        var_name = match.group(1)
        return os.getenv(var_name, match.group(0))

    return _ENV_PATTERN.sub(repl, content)


def _parse_yaml_with_includes(text: str, base_dir: str, source: Optional[str] = None) -> Any:
    """
    Parse YAML supporting a custom !include tag.
    - Usage: key: !include path/to/file.yml
    - Supports wildcards: key: !include path/pattern/*
    - Paths are resolved relative to base_dir (config file directory).
    Merging rules for multiple matches:
      - All dicts => deep-merge in sorted filename order (later overrides earlier)
      - All lists => concatenate
      - Mixed types => return list of loaded values in sorted order
    A missing include target is a ConfigError.
    """

    class IncludeLoader(yaml.SafeLoader):
        pass

    def construct_mapping(loader: yaml.SafeLoader, node: yaml.MappingNode) -> LineDict:
        loader.flatten_mapping(node)
        data = LineDict()
        data.source = source
        data.line = node.start_mark.line + 1
        for key_node, value_node in node.value:
            key = loader.construct_object(key_node, deep=True)
            try:
                data[key] = loader.construct_object(value_node, deep=True)
            except TypeError as e:
                raise ConfigError(
                    f"unhashable mapping key: {e}", path=source, line=key_node.start_mark.line + 1
                ) from e
            data.key_lines[key] = key_node.start_mark.line + 1
        return data

    def construct_include(loader: yaml.SafeLoader, node: yaml.Node) -> Any:
        line = node.start_mark.line + 1
        pattern = loader.construct_scalar(node)  # type: ignore[arg-type]
        if not isinstance(pattern, str) or not pattern:
            raise ConfigError("!include expects a file path", path=source, line=line)

        full_pattern = os.path.join(base_dir, pattern)
        matches = sorted(glob.glob(full_pattern))
        if not matches:
            raise ConfigError(f"!include target not found: {pattern}", path=source, line=line)

        results = [r for r in (_load_yaml_any(p) for p in matches) if r is not None]
        if not results:
            return {}
        if len(results) == 1:
            return results[0]
        if all(isinstance(r, dict) for r in results):
            merged: Dict[str, Any] = {}
            for r in results:
                merged = merge_dicts(merged, r)
            return merged
        if all(isinstance(r, list) for r in results):
            out_list: list[Any] = []
            for r in results:
                out_list.extend(r)
            return out_list
        return results

    IncludeLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, construct_mapping)
    IncludeLoader.add_constructor("!include", construct_include)
    try:
        return yaml.load(text, Loader=IncludeLoader)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {e.problem or e}", path=source, line=line) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"YAML error: {e}", path=source) from e


def _load_yaml_any(path: str) -> Any:
    """Load a YAML file (any top-level type) with env expansion and !include support."""
    if not os.path.isfile(path):
        return None
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read file: {e}", path=path) from e
    text = _expand_env(text)
    base_dir = os.path.dirname(os.path.abspath(path))
    return _parse_yaml_with_includes(text, base_dir, source=path)


def load_yaml(path: str) -> Optional[Dict[str, Any]]:
    """Load a mapping document; None when the file does not exist.

    A document whose top level is not a mapping is a ConfigError.
    """
    if not os.path.isfile(path):
        return None
    data = _load_yaml_any(path)
    if data is None:
        return LineDict()
    if not isinstance(data, dict):
        raise ConfigError(
            f"top-level document must be a mapping, got {type(data).__name__}", path=path, line=1
        )
    return data


def merge_dicts(a: Dict[str, Any], b: Dict[str, Any]) -> Dict[str, Any]:
    """Merge two dictionaries recursively, b overrides a.

    The result keeps the type (and line bookkeeping) of ``a``.
    """
    result = copy.copy(a)
    for k, v in b.items():
        if k in result and isinstance(result[k], dict) and isinstance(v, dict):
            result[k] = merge_dicts(result[k], v)
        else:
            result[k] = v
    return result
