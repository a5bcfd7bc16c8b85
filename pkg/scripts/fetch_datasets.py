"""Download the benchmark datasets that are not shipped in data/.

    python scripts/fetch_datasets.py            # Banknote and AReM
    python scripts/fetch_datasets.py --verify   # only check data/SHA256SUMS

Banknote becomes data/banknote.csv (with a header row) and AReM is unpacked
to data/AReM/<activity>/dataset*.csv. Checksums of new downloads are
appended to data/SHA256SUMS so later runs can verify them.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "data"
SUMS = DATA / "SHA256SUMS"
UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"
BANKNOTE_URL = f"{UCI}/00267/data_banknote_authentication.txt"
AREM_URL = f"{UCI}/00366/AReM.zip"
BANKNOTE_HEADER = "variance,skewness,curtosis,entropy,class\n"


def sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def read_sums() -> dict[str, str]:
    if not SUMS.is_file():
        return {}
    out = {}
    for line in SUMS.read_text().splitlines():
        if line.strip():
            digest, name = line.split(maxsplit=1)
            out[name.strip()] = digest
    return out


def write_sums(sums: dict[str, str]) -> None:
    SUMS.write_text("".join(f"{d}  {n}\n" for n, d in sorted(sums.items())))


def verify() -> bool:
    ok = True
    for name, digest in read_sums().items():
        path = DATA / name
        if not path.is_file():
            print(f"missing   {name}")
            ok = False
        elif sha256(path) != digest:
            print(f"MISMATCH  {name}")
            ok = False
        else:
            print(f"ok        {name}")
    return ok


def download(url: str, timeout: float) -> bytes:
    print(f"fetching {url}")
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        return resp.read()


def fetch_banknote(timeout: float) -> list[str]:
    body = download(BANKNOTE_URL, timeout).decode("ascii")
    rows = [line.strip() for line in body.splitlines() if line.strip()]
    out = DATA / "banknote.csv"
    out.write_text(BANKNOTE_HEADER + "\n".join(rows) + "\n")
    print(f"wrote {out} ({len(rows)} rows)")
    return [out.name]


def fetch_arem(timeout: float) -> list[str]:
    archive = zipfile.ZipFile(io.BytesIO(download(AREM_URL, timeout)))
    root = DATA / "AReM"
    written = []
    for info in archive.infolist():
        parts = Path(info.filename).parts
        if info.is_dir() or not info.filename.endswith(".csv") or len(parts) < 2:
            continue
        dest = root / parts[-2] / parts[-1]
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_bytes(archive.read(info))
        written.append(str(dest.relative_to(DATA)))
    print(f"unpacked {len(written)} files under {root}")
    return written


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--verify", action="store_true", help="only verify existing files")
    p.add_argument("--only", choices=["banknote", "arem"], help="fetch a single dataset")
    p.add_argument("--timeout", type=float, default=60.0)
    args = p.parse_args(argv)
    if args.verify:
        return 0 if verify() else 1

    sums = read_sums()
    jobs = {"banknote": fetch_banknote, "arem": fetch_arem}
    failed = False
    for name, job in jobs.items():
        if args.only and name != args.only:
            continue
        try:
            files = job(args.timeout)
        except OSError as exc:
            print(f"could not fetch {name}: {exc}", file=sys.stderr)
            failed = True
            continue
        for f in files:
            digest = sha256(DATA / f)
            if f in sums and sums[f] != digest:
                print(f"warning: {f} differs from the recorded checksum", file=sys.stderr)
            sums[f] = digest
    write_sums(sums)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
