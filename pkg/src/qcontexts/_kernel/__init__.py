"""Section-search kernel: compiled extension if available, else pure Python."""

import os

if os.environ.get("QCONTEXTS_PURE") == "1":
    from ._section_search_py import BACKEND, search_sections
else:
    try:
        from ._section_search import BACKEND, search_sections
    except ImportError:  # pragma: no cover - depends on build environment
        from ._section_search_py import BACKEND, search_sections

from . import _section_search_py

__all__ = ["BACKEND", "search_sections", "_section_search_py"]
