#!/usr/bin/env python3
"""Regenerate the committed golden service responses under tests/golden/.

Run from the repository root after any intentional change to response shapes,
store formats, or the fixture configuration:

    python scripts/regen_goldens.py

The acceptance suite replays tests/golden/requests.json against a freshly
built fixture and compares response bytes against the committed files.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from fastapi.testclient import TestClient

from fixture_config import GOLDEN_DIR, build_fixture, golden_requests, state_from_run
from tripmill.service import create_app


def main() -> int:
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(prefix="tripmill-golden-") as tmp:
        cfg = build_fixture(Path(tmp))
        state = state_from_run(cfg)
        requests = golden_requests(state)
        client = TestClient(create_app(state))
        for req in requests:
            resp = client.get(req["path"])
            if resp.status_code != req["status"]:
                print(f"unexpected status for {req['path']}: {resp.status_code}", file=sys.stderr)
                return 1
            (GOLDEN_DIR / f"{req['name']}.json").write_bytes(resp.content)
            print(f"wrote {req['name']}.json ({len(resp.content)} bytes)")
        (GOLDEN_DIR / "requests.json").write_text(
            json.dumps(requests, indent=1) + "\n", encoding="utf-8"
        )
        print(f"wrote requests.json ({len(requests)} requests)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
