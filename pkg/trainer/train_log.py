"""Журнал обучения: одна запись на эпоху, формат JSON lines."""
import json
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from loguru import logger
from pydantic import BaseModel, Field

Phase = Literal["classification", "finetune"]


class EpochRecord(BaseModel):
    """Итоги эпохи."""
    epoch: int = Field(..., ge=1)
    phase: Phase
    loss: float
    cls_loss: float
    earliness_loss: float
    train_acc: float
    val_acc: Optional[float] = None
    val_earliness: Optional[float] = None
    val_cost: Optional[float] = None
    wall_ms: Optional[float] = None
    optimizer: Dict[str, float] = Field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(exclude_none=True), sort_keys=True, separators=(",", ":"))


class TrainingLog(BaseModel):
    records: List[EpochRecord] = Field(default_factory=list)

    def append(self, record: EpochRecord):
        self.records.append(record)
        parts = [f"эпоха {record.epoch} ({record.phase})", f"loss={record.loss:.5f}",
                 f"cls={record.cls_loss:.5f}", f"earl={record.earliness_loss:.5f}", f"acc={record.train_acc:.3f}"]
        if record.val_acc is not None:
            parts.append(f"val_acc={record.val_acc:.3f}")
        logger.info(", ".join(parts))

    def extend(self, other: "TrainingLog"):
        self.records.extend(other.records)

    @property
    def last(self) -> Optional[EpochRecord]:
        return self.records[-1] if self.records else None

    def to_jsonl(self) -> str:
        return "".join(record.to_json() + "\n" for record in self.records)

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        logger.info(f"Журнал обучения записан: {path} ({len(self.records)} эпох)")
        return path

    @classmethod
    def read(cls, path: Union[str, Path]) -> "TrainingLog":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(records=[EpochRecord.model_validate_json(line) for line in lines if line.strip()])
