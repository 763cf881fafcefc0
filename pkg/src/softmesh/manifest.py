"""Reproducibility manifests: every writing subcommand records what it ran.

The manifest is written twice: once before any output is finalized (inputs,
resolved config, seed, argv) and once after, adding a content hash per
output file. Re-running the recorded argv must reproduce those hashes
bit for bit.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Union

from . import __version__

MANIFEST_NAME = "manifest.json"


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    inputs: dict[str, str]
    config: dict
    seed: int | None
    version: str
    outputs: dict[str, str] = field(default_factory=dict)

    @classmethod
    def begin(
        cls,
        out_dir: Path,
        command: str,
        argv: list[str],
        inputs: list[Union[str, Path]],
        config: dict | None = None,
        seed: int | None = None,
    ) -> "RunManifest":
        manifest = cls(
            command=command,
            argv=[str(a) for a in argv],
            inputs={str(p): sha256_file(p) for p in inputs},
            config=config or {},
            seed=seed,
            version=__version__,
        )
        manifest.write(out_dir)
        return manifest

    def finish(self, out_dir: Path, outputs: list[Path]) -> None:
        self.outputs = {p.name: sha256_file(p) for p in sorted(outputs)}
        self.write(out_dir)

    def write(self, out_dir: Path) -> None:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


def load_manifest(path: Union[str, Path]) -> dict:
    return json.loads(Path(path).read_text())
