"""Node configuration: canonical JSON file mirroring the runtime settings.

`KNOWMESH_CONFIG` overrides the config path when the CLI gets no explicit
--config argument.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .canonical import canonical_bytes
from .errors import ValidationError

ENV_VAR = "KNOWMESH_CONFIG"
DEFAULT_PATH = "knowmesh.json"


@dataclass
class PeerEntry:
    address: str
    token: str = ""

    def to_dict(self) -> dict:
        return {"address": self.address, "token": self.token}


@dataclass
class NodeConfig:
    partner_id: str
    listen: str = "127.0.0.1:7450"
    data_dir: str | None = None
    peers: dict[str, PeerEntry] = field(default_factory=dict)
    allow_firm_facilitator: bool = False
    facilitator_read_access: bool = True
    ui_dir: str | None = None

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    @property
    def base_url(self) -> str:
        return f"http://{self.listen}"

    def to_dict(self) -> dict:
        return {
            "partner_id": self.partner_id,
            "listen": self.listen,
            "data_dir": self.data_dir,
            "peers": {rel: entry.to_dict() for rel, entry in sorted(self.peers.items())},
            "allow_firm_facilitator": self.allow_firm_facilitator,
            "facilitator_read_access": self.facilitator_read_access,
            "ui_dir": self.ui_dir,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(canonical_bytes(self.to_dict()))

    @classmethod
    def from_dict(cls, data: dict) -> "NodeConfig":
        if not isinstance(data, dict) or not data.get("partner_id"):
            raise ValidationError("config needs a partner_id")
        peers = {}
        for rel, entry in data.get("peers", {}).items():
            peers[rel] = PeerEntry(address=entry["address"], token=entry.get("token", ""))
        return cls(
            partner_id=data["partner_id"],
            listen=data.get("listen", "127.0.0.1:7450"),
            data_dir=data.get("data_dir"),
            peers=peers,
            allow_firm_facilitator=data.get("allow_firm_facilitator", False),
            facilitator_read_access=data.get("facilitator_read_access", True),
            ui_dir=data.get("ui_dir"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "NodeConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValidationError(f"no config file at {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"unparseable config {path}: {exc}") from None
        return cls.from_dict(data)


def resolve_config_path(explicit: str | None) -> str:
    return explicit or os.environ.get(ENV_VAR) or DEFAULT_PATH
