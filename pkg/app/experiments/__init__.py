from app.experiments.bias_study import CLICK_ROW, JUDGMENT_ROW, run_bias_study
from app.experiments.table import TABLE_ROWS, run_table

__all__ = ["CLICK_ROW", "JUDGMENT_ROW", "run_bias_study", "TABLE_ROWS", "run_table"]
