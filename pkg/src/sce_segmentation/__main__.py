from __future__ import annotations

from sce_segmentation.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
