import os
import sys

from funnelgate.scenarios import PRESETS

BASE_DIR = os.path.dirname(os.path.dirname(os.path.dirname(__file__)))
CONFIG_DIR = os.path.join(BASE_DIR, "configs")


def export_presets(target_dir=CONFIG_DIR):
    """Write every built-in scenario as an editable JSON run document."""
    os.makedirs(target_dir, exist_ok=True)
    written = []
    for name, build in sorted(PRESETS.items()):
        path = os.path.join(target_dir, f"{name}.json")
        build().save(path)
        written.append(path)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else CONFIG_DIR
    for path in export_presets(target):
        print(f"wrote {path}")
