"""Таблицы доминирования: сравнение стоимости решений по наборам при равном α."""
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

from loguru import logger

from .competitors import CompetitorTable, competitor_cost
from .evaluation import EvalRecord

# Стоимости, отличающиеся меньше чем на эту величину, считаются равными
TIE_TOLERANCE = 1e-12


@dataclass
class DominationRow:
    dataset: str
    ours_cost: float
    theirs_cost: float
    outcome: str


@dataclass
class DominationResult:
    """Победы, поражения и ничьи нашего метода против одного конкурента."""
    method: str
    alpha: float
    wins: List[str] = field(default_factory=list)
    losses: List[str] = field(default_factory=list)
    ties: List[str] = field(default_factory=list)
    unmatched_ours: List[str] = field(default_factory=list)
    unmatched_theirs: List[str] = field(default_factory=list)
    rows: List[DominationRow] = field(default_factory=list)

    @property
    def counts(self) -> Tuple[int, int, int]:
        return len(self.wins), len(self.losses), len(self.ties)

    @property
    def matched(self) -> int:
        return len(self.rows)

    def to_dict(self) -> dict:
        wins, losses, ties = self.counts
        return {"method": self.method, "alpha": self.alpha, "wins": wins, "losses": losses, "ties": ties,
                "unmatched_ours": self.unmatched_ours, "unmatched_theirs": self.unmatched_theirs,
                "rows": [asdict(r) for r in self.rows]}


def _outcome(ours: float, theirs: float) -> str:
    if math.isclose(ours, theirs, rel_tol=0.0, abs_tol=TIE_TOLERANCE):
        return "tie"
    return "win" if ours < theirs else "loss"


def compare_costs(ours: Dict[str, float], theirs: Dict[str, float], method: str = "",
                  alpha: float = float("nan")) -> DominationResult:
    """Сравнение стоимостей по общим наборам; меньшая стоимость побеждает."""
    result = DominationResult(method=method, alpha=alpha,
                              unmatched_ours=sorted(set(ours) - set(theirs)),
                              unmatched_theirs=sorted(set(theirs) - set(ours)))
    for dataset in sorted(set(ours) & set(theirs)):
        outcome = _outcome(ours[dataset], theirs[dataset])
        {"win": result.wins, "loss": result.losses, "tie": result.ties}[outcome].append(dataset)
        result.rows.append(DominationRow(dataset=dataset, ours_cost=ours[dataset], theirs_cost=theirs[dataset],
                                         outcome=outcome))
    return result


def ours_costs(records: Iterable[EvalRecord], alpha: float) -> Dict[str, float]:
    """Средняя стоимость наших записей при заданном α по наборам (несколько запусков усредняются)."""
    grouped: Dict[str, List[float]] = defaultdict(list)
    for record in records:
        if math.isclose(record.alpha, alpha, abs_tol=1e-9):
            grouped[record.dataset].append(record.mean_cost)
    return {dataset: math.fsum(costs) / len(costs) for dataset, costs in grouped.items()}


def domination_table(ours: Sequence[EvalRecord], theirs: CompetitorTable, alpha: float) -> DominationResult:
    """
    Таблица доминирования при весе α.

    Стоимость конкурента пересчитывается по опубликованным точности и
    ранности; наборы, представленные только с одной стороны, в счет не входят.

    Args:
        ours: Наши записи оценки
        theirs: Результаты конкурента
        alpha: Вес α

    Returns:
        DominationResult: Списки побед, поражений, ничьих и несопоставленных наборов
    """
    their_rows = theirs.at_alpha(alpha)
    theirs_cost = {d: competitor_cost(r.accuracy, r.earliness, alpha) for d, r in their_rows.items()}
    result = compare_costs(ours_costs(ours, alpha), theirs_cost, method=theirs.method, alpha=alpha)
    wins, losses, ties = result.counts
    logger.info(f"{theirs.method}, α={alpha}: побед {wins}, поражений {losses}, ничьих {ties}")
    if result.unmatched_ours or result.unmatched_theirs:
        logger.warning(f"{theirs.method}, α={alpha}: несопоставленные наборы "
                       f"(наши: {len(result.unmatched_ours)}, их: {len(result.unmatched_theirs)})")
    return result


def domination_matrix(ours: Sequence[EvalRecord], tables: Dict[str, CompetitorTable],
                      alphas: Sequence[float]) -> List[DominationResult]:
    """Таблицы доминирования для всех методов и всех α."""
    return [domination_table(ours, tables[method], alpha) for alpha in alphas for method in sorted(tables)]
