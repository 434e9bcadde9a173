# funnelgate/run_ledger.py

import json
import os
import sqlite3
from datetime import datetime, timezone
from pathlib import Path
from typing import List, Optional

LEDGER_NAME = "runs.db"


def ledger_path(out_dir) -> str:
    return os.path.join(str(out_dir), LEDGER_NAME)


# ------------------------------------------------------------
# Init
# ------------------------------------------------------------

def init_ledger(out_dir) -> str:
    os.makedirs(str(out_dir), exist_ok=True)
    path = ledger_path(out_dir)
    con = sqlite3.connect(path)
    cur = con.cursor()

    cur.execute("""
        CREATE TABLE IF NOT EXISTS runs (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            started TEXT,
            command TEXT,
            scenario TEXT,
            seed INTEGER,
            exit_code INTEGER,
            summary TEXT
        )
    """)

    con.commit()
    con.close()
    return path


# ------------------------------------------------------------
# Rows
# ------------------------------------------------------------

def record_run(out_dir, command: str, scenario: Optional[str], seed: Optional[int],
               exit_code: int, summary: Optional[dict] = None) -> int:
    path = init_ledger(out_dir)
    con = sqlite3.connect(path)
    cur = con.cursor()
    cur.execute(
        "INSERT INTO runs (started, command, scenario, seed, exit_code, summary) VALUES (?, ?, ?, ?, ?, ?)",
        (
            datetime.now(timezone.utc).isoformat(timespec="seconds"),
            command,
            scenario,
            seed,
            exit_code,
            json.dumps(summary or {}, sort_keys=True),
        ),
    )
    run_id = cur.lastrowid
    con.commit()
    con.close()
    return run_id


def list_runs(out_dir, limit: int = 20) -> List[dict]:
    path = ledger_path(out_dir)
    if not Path(path).exists():
        return []
    con = sqlite3.connect(path)
    cur = con.cursor()
    cur.execute("""
        SELECT id, started, command, scenario, seed, exit_code, summary
        FROM runs
        ORDER BY id DESC
        LIMIT ?
    """, (limit,))
    rows = cur.fetchall()
    con.close()
    return [
        {
            "id": r[0],
            "started": r[1],
            "command": r[2],
            "scenario": r[3],
            "seed": r[4],
            "exit_code": r[5],
            "summary": json.loads(r[6] or "{}"),
        }
        for r in rows
    ]
