"""Метрики, таблицы доминирования и выгрузка данных для графиков."""
from .competitors import (METHOD_PARAMETERS, CompetitorRow, CompetitorTable, ReferenceDataRequired, competitor_cost,
                          load_competitors, native_parameter)
from .domination import DominationResult, compare_costs, domination_matrix, domination_table, ours_costs
from .evaluation import EvalRecord, EvaluationReport, SeriesOutcome, evaluate, final_step_accuracy, read_records
from .exports import (export_loss_curves, export_scatter, export_trace, export_tradeoff_curve, scatter_rows,
                      trace_rows)

__all__ = [
    "METHOD_PARAMETERS", "CompetitorRow", "CompetitorTable", "ReferenceDataRequired", "competitor_cost",
    "load_competitors", "native_parameter",
    "DominationResult", "compare_costs", "domination_matrix", "domination_table", "ours_costs",
    "EvalRecord", "EvaluationReport", "SeriesOutcome", "evaluate", "final_step_accuracy", "read_records",
    "export_loss_curves", "export_scatter", "export_trace", "export_tradeoff_curve", "scatter_rows", "trace_rows",
]
