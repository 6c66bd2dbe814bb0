"""Regenerate the page images, width table and config of the end-to-end corpus.

Each document is one scanned spread: cdc1975 holds two programme pages
side by side, fab2024 three. Transcriptions come from ``hyp/`` through
the stub service, so the evaluation step reproduces ``golden/eval.*``.

    python3 tests/fixtures/make_corpus.py
"""

import sys
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

from synth import spread  # noqa: E402

from showprog.imaging import save_page_image  # noqa: E402

SUBPAGE_W, SUBPAGE_H = 300, 420
DOCS = {"cdc1975": "tt", "fab2024": "ttt"}

CONFIG = """\
paths:
  images: images
  subpages: out/subpages
  transcriptions: out/transcriptions
  reference: ref
  reports: out/reports
  graphs: out/graphs
  drafts: drafts
  state: out/state
segmentation:
  reference_widths: widths.csv
transcription:
  poll_interval: 0.01
  endpoint:
    kind: stub
    responses: hyp
evaluation:
  gazetteer: gazetteer.txt
documents:
  fab2024:
    born_digital: false
"""


def main(root: Path = HERE / "corpus") -> None:
    for seed, (doc_id, layout) in enumerate(sorted(DOCS.items())):
        page, _ = spread(layout, SUBPAGE_W, SUBPAGE_H, seed=seed, doc_id=doc_id)
        save_page_image(page, root / "images" / doc_id / "0.png")
    (root / "widths.csv").write_text(
        "# tolerance=0.93\nperiod,year,median_width\n"
        f"digitised,1975,{SUBPAGE_W}\nborn-digital,2024,{SUBPAGE_W}\n",
        encoding="utf-8",
    )
    (root / "showprog.yaml").write_text(CONFIG, encoding="utf-8")


if __name__ == "__main__":
    main()
