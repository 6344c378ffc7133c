"""Конфигурации моделей."""
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ConvShapeletConfig(BaseModel):
    """Гиперпараметры сверточной shapelet-модели."""
    model_config = ConfigDict(frozen=True)

    num_blocks: int = Field(4, ge=1)
    kernels_per_block: int = Field(8, ge=1)
    width_step: int = Field(3, ge=1)
    # ширина ядра блока l (с единицы): width_offset + l * width_step
    width_offset: int = Field(0, ge=0)
    input_dim: int = Field(1, ge=1)
    dropout_rate: float = Field(0.5, ge=0.0, lt=1.0)

    @property
    def hidden_dim(self) -> int:
        return self.num_blocks * self.kernels_per_block

    def kernel_width(self, block: int) -> int:
        return self.width_offset + block * self.width_step


class LstmConfig(BaseModel):
    """Гиперпараметры многослойной LSTM."""
    model_config = ConfigDict(frozen=True)

    num_layers: int = Field(2, ge=1)
    hidden_dim: int = Field(32, ge=1)
    input_dim: int = Field(1, ge=1)


BackboneConfig = Union[ConvShapeletConfig, LstmConfig]


class ModelConfig(BaseModel):
    """Выбор бэкбона, его гиперпараметры и размеры голов классификации и остановки."""
    model_config = ConfigDict(frozen=True)

    backbone: Literal["conv", "lstm"] = "conv"
    num_classes: int = Field(2, ge=2)
    conv: Optional[ConvShapeletConfig] = None
    lstm: Optional[LstmConfig] = None

    @model_validator(mode="before")
    @classmethod
    def _fill_backbone(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            backbone = data.get("backbone", "conv")
            if backbone == "conv" and data.get("conv") is None:
                data["conv"] = ConvShapeletConfig()
            if backbone == "lstm" and data.get("lstm") is None:
                data["lstm"] = LstmConfig()
        return data

    @property
    def backbone_config(self) -> BackboneConfig:
        return self.conv if self.backbone == "conv" else self.lstm

    @property
    def hidden_dim(self) -> int:
        return self.backbone_config.hidden_dim

    @property
    def input_dim(self) -> int:
        return self.backbone_config.input_dim

    def describe(self) -> dict:
        """Гиперпараметры выбранного бэкбона (для таблиц и логов)."""
        return {"backbone": self.backbone, **self.backbone_config.model_dump()}
