#!/usr/bin/env python3
"""Скрипт для сборки и проверки индекса уравнений docs/equation-index.md."""

import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT / "src"))

from deformed_lindblad.equation_index import (  # noqa: E402
    coverage_gaps,
    missing_tests,
    render_document,
)

OUTPUT_FILE = ROOT / "docs" / "equation-index.md"
TESTS_DIR = ROOT / "tests"


def main() -> int:
    """Основная функция."""
    print("🚀 Сборка индекса уравнений...\n")

    gaps = coverage_gaps()
    if gaps:
        print(f"❌ Уравнения без тестов: {', '.join(f'({eq})' for eq in gaps)}")

    missing = missing_tests(TESTS_DIR)
    for ref in missing:
        print(f"❌ Тест не найден: {ref}")

    OUTPUT_FILE.parent.mkdir(parents=True, exist_ok=True)
    OUTPUT_FILE.write_text(render_document(), encoding="utf-8")
    print(f"✅ Записан {OUTPUT_FILE.relative_to(ROOT)}")

    if gaps or missing:
        return 1
    print("\n✅ Все уравнения покрыты тестами")
    return 0


if __name__ == "__main__":
    sys.exit(main())
