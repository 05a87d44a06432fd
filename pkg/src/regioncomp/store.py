"""On-disk run store: one directory per run with a JSON record and the final
image as PPM and PNG. Every run is bit-exactly replayable from its record.
"""

from __future__ import annotations

import datetime
import json
import os
import secrets
import threading
from dataclasses import dataclass

from . import latents
from .repaint import RepaintRequest, repaint_trajectory
from .sampler import Sampler, SamplerConfig, Trajectory
from .scene import SceneSpec

DEFAULT_STORE_ENV = "REGIONCOMP_STORE"


class RunNotFound(KeyError):
    pass


@dataclass
class RunRecord:
    run_id: str
    created_at: str
    scene: SceneSpec
    config: SamplerConfig
    parent_run: str = None
    repaint: RepaintRequest = None
    status: str = "done"

    def to_dict(self):
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "scene": self.scene.to_dict(),
            "config": self.config.to_dict(),
            "parent_run": self.parent_run,
            "repaint": self.repaint.to_dict() if self.repaint else None,
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, d) -> "RunRecord":
        return cls(
            run_id=d["run_id"],
            created_at=d["created_at"],
            scene=SceneSpec.from_dict(d["scene"]),
            config=SamplerConfig.from_dict(d["config"]),
            parent_run=d.get("parent_run"),
            repaint=RepaintRequest.from_dict(d["repaint"]) if d.get("repaint") else None,
            status=d.get("status", "done"),
        )


def new_run_id() -> str:
    return secrets.token_hex(16)


class RunStore:
    """Directory-backed store; writes are serialized per store instance."""

    def __init__(self, root):
        self.root = os.path.abspath(root)
        os.makedirs(self.root, exist_ok=True)
        self._lock = threading.Lock()

    # -- paths -------------------------------------------------------------

    def _dir(self, run_id):
        return os.path.join(self.root, run_id)

    def record_path(self, run_id):
        return os.path.join(self._dir(run_id), "record.json")

    def image_path(self, run_id, fmt="ppm"):
        return os.path.join(self._dir(run_id), f"image.{fmt}")

    # -- reads -------------------------------------------------------------

    def get_record(self, run_id) -> RunRecord:
        path = self.record_path(run_id)
        if not os.path.exists(path):
            raise RunNotFound(run_id)
        with open(path, encoding="utf-8") as f:
            return RunRecord.from_dict(json.load(f))

    def get_image_bytes(self, run_id, fmt="ppm") -> bytes:
        path = self.image_path(run_id, fmt)
        if not os.path.exists(path):
            raise RunNotFound(run_id)
        with open(path, "rb") as f:
            return f.read()

    def list_runs(self):
        """Run summaries in creation order."""
        records = []
        for name in os.listdir(self.root):
            path = self.record_path(name)
            if os.path.exists(path):
                with open(path, encoding="utf-8") as f:
                    d = json.load(f)
                records.append(d)
        records.sort(key=lambda d: (d["created_at"], d["run_id"]))
        return [
            {
                "run_id": d["run_id"],
                "created_at": d["created_at"],
                "parent_run": d.get("parent_run"),
                "status": d.get("status", "done"),
                "k": len(d["scene"]["regions"]),
                "strategy": d["config"]["strategy"],
            }
            for d in records
        ]

    def count_children(self, run_id):
        return sum(1 for s in self.list_runs() if s["parent_run"] == run_id)

    # -- replay ------------------------------------------------------------

    def replay_trajectory(self, run_id) -> Trajectory:
        """Reconstruct the run's full trajectory from its record chain."""
        rec = self.get_record(run_id)
        if rec.parent_run is None:
            return Sampler(rec.config).sample(rec.scene)
        parent = self.get_record(rec.parent_run)
        base_traj = self.replay_trajectory(rec.parent_run)
        return repaint_trajectory(base_traj, parent.scene, parent.config, rec.repaint)

    # -- writes ------------------------------------------------------------

    def _persist(self, rec: RunRecord, final_image):
        with self._lock:
            d = self._dir(rec.run_id)
            os.makedirs(d, exist_ok=True)
            with open(self.record_path(rec.run_id), "w", encoding="utf-8") as f:
                json.dump(rec.to_dict(), f, indent=2, sort_keys=True, ensure_ascii=False)
            latents.save_ppm(self.image_path(rec.run_id, "ppm"), final_image)
            latents.save_png(self.image_path(rec.run_id, "png"), final_image)

    def create_run(self, scene: SceneSpec, cfg: SamplerConfig) -> str:
        cfg.validate()
        traj = Sampler(cfg).sample(scene)
        rec = RunRecord(
            run_id=new_run_id(),
            created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            scene=scene,
            config=cfg,
        )
        self._persist(rec, traj.final)
        return rec.run_id

    def create_repaint(self, run_id, req: RepaintRequest) -> str:
        parent = self.get_record(run_id)
        if parent.status != "done":
            raise ValueError(f"base run {run_id} is not done")
        base_traj = self.replay_trajectory(run_id)
        traj = repaint_trajectory(base_traj, parent.scene, parent.config, req)
        from .repaint import edited_scene

        rec = RunRecord(
            run_id=new_run_id(),
            created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
            scene=edited_scene(parent.scene, req),
            config=parent.config,
            parent_run=run_id,
            repaint=req,
        )
        self._persist(rec, traj.final)
        return rec.run_id
