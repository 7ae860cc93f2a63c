#!/usr/bin/env python3
"""Generate a C++ header embedding the bundled data files as string literals."""
import sys
from pathlib import Path

HEADER = """\
// Generated by cmake/embed_data.py -- do not edit.
#pragma once

#include <string_view>

namespace fairaudit::embedded {

"""

FOOTER = """\
}  // namespace fairaudit::embedded
"""


def literal(name: str, text: str) -> str:
    delim = "fa_data"
    while f"){delim}\"" in text:
        delim += "_"
    return f'inline constexpr std::string_view {name} = R"{delim}({text}){delim}";\n\n'


def main() -> int:
    out_path = Path(sys.argv[1])
    data_dir = Path(sys.argv[2])
    entries = [
        ("kRegistry", "registry.jsonl"),
        ("kRubrics", "rubrics.json"),
        ("kTemplateIcs", "templates/ics.txt"),
        ("kTemplateTcs", "templates/tcs.txt"),
        ("kTemplatePcs", "templates/pcs.txt"),
        ("kTemplateEtcs", "templates/etcs.txt"),
        ("kTemplateSbas", "templates/sbas.txt"),
        ("kTemplateCot", "templates/cot.txt"),
        ("kTemplateGeneration", "templates/generation.txt"),
    ]
    parts = [HEADER]
    for name, rel in entries:
        parts.append(literal(name, (data_dir / rel).read_text(encoding="utf-8")))
    parts.append(FOOTER)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("".join(parts), encoding="utf-8")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
