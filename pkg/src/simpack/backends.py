"""Second-stage compression backends.

Three kinds are supported: ``identity`` (store), the builtin ``lzss``
codec, and ``external`` commands supplied by the user.  External commands
come as a compress/decompress pair; each command either names ``{in}`` and
``{out}`` placeholders for temp files or filters stdin to stdout.
"""

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import CorruptPayload, ExternalBackendFailed
from .lzss import lzss_compress, lzss_decompress

__all__ = [
    "IDENTITY_ID",
    "LZSS_ID",
    "EXTERNAL_ID",
    "BackendSpec",
    "backend_compress",
    "backend_decompress",
    "resolve_backend",
]

IDENTITY_ID = 0
LZSS_ID = 1
EXTERNAL_ID = 2

_EXTERNAL_SEP = "::"


@dataclass(frozen=True)
class BackendSpec:
    """Identifies a second-stage backend and, if external, its commands."""

    kind: str
    compress_cmd: str | None = None
    decompress_cmd: str | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "lzss", "external"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.kind == "external":
            if not self.compress_cmd or not self.decompress_cmd:
                raise ValueError("external backend needs both commands")

    @classmethod
    def identity(cls) -> "BackendSpec":
        return cls("identity")

    @classmethod
    def lzss(cls) -> "BackendSpec":
        return cls("lzss")

    @classmethod
    def external(cls, compress_cmd: str, decompress_cmd: str) -> "BackendSpec":
        return cls("external", compress_cmd, decompress_cmd)

    @classmethod
    def parse(cls, text: str) -> "BackendSpec":
        """Parse a CLI backend argument.

        Accepted forms: ``identity``, ``lzss``, and
        ``ext:<compress cmd>::<decompress cmd>``.
        """
        if text == "identity":
            return cls.identity()
        if text == "lzss":
            return cls.lzss()
        if text.startswith("ext:"):
            rest = text[4:]
            if _EXTERNAL_SEP in rest:
                ccmd, dcmd = rest.split(_EXTERNAL_SEP, 1)
            else:
                ccmd, dcmd = rest, rest
            ccmd, dcmd = ccmd.strip(), dcmd.strip()
            if not ccmd or not dcmd:
                raise ValueError(f"bad external backend spec {text!r}")
            return cls.external(ccmd, dcmd)
        raise ValueError(f"unknown backend {text!r}")

    @property
    def id(self) -> int:
        return {"identity": IDENTITY_ID, "lzss": LZSS_ID, "external": EXTERNAL_ID}[
            self.kind
        ]


def resolve_backend(backend_id: int, external: BackendSpec | None) -> BackendSpec:
    """Map a container backend id back to a usable spec."""
    if backend_id == IDENTITY_ID:
        return BackendSpec.identity()
    if backend_id == LZSS_ID:
        return BackendSpec.lzss()
    if backend_id == EXTERNAL_ID:
        if external is None or external.kind != "external":
            raise ExternalBackendFailed(
                "archive was written with an external backend; "
                "pass the command pair to decompress it"
            )
        return external
    raise CorruptPayload(f"unknown backend id {backend_id}")


def _run_external(command: str, data: bytes) -> bytes:
    """Run one external command over ``data`` and return its output."""
    uses_files = "{in}" in command or "{out}" in command
    try:
        if uses_files:
            with tempfile.TemporaryDirectory(prefix="simpack-ext-") as tmp:
                in_path = Path(tmp) / "input"
                out_path = Path(tmp) / "output"
                in_path.write_bytes(data)
                argv = [
                    arg.replace("{in}", str(in_path)).replace("{out}", str(out_path))
                    for arg in shlex.split(command)
                ]
                proc = subprocess.run(argv, capture_output=True)
                if proc.returncode != 0:
                    raise ExternalBackendFailed(
                        f"{argv[0]} exited with status {proc.returncode}: "
                        f"{proc.stderr.decode(errors='replace').strip()}"
                    )
                if not out_path.exists():
                    raise ExternalBackendFailed(
                        f"{argv[0]} did not produce its {{out}} file"
                    )
                return out_path.read_bytes()
        argv = shlex.split(command)
        proc = subprocess.run(argv, input=data, capture_output=True)
        if proc.returncode != 0:
            raise ExternalBackendFailed(
                f"{argv[0]} exited with status {proc.returncode}: "
                f"{proc.stderr.decode(errors='replace').strip()}"
            )
        return proc.stdout
    except FileNotFoundError as exc:
        raise ExternalBackendFailed(f"command not found: {exc.filename}") from exc
    except OSError as exc:
        raise ExternalBackendFailed(f"failed to run external command: {exc}") from exc


def backend_compress(spec: BackendSpec, data: bytes) -> bytes:
    if spec.kind == "identity":
        return data
    if spec.kind == "lzss":
        return lzss_compress(data)
    return _run_external(spec.compress_cmd, data)


def backend_decompress(spec: BackendSpec, data: bytes) -> bytes:
    if spec.kind == "identity":
        return data
    if spec.kind == "lzss":
        return lzss_decompress(data)
    return _run_external(spec.decompress_cmd, data)
