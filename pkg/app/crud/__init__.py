# CRUD module init
from .dataset_crud import dataset_crud, DatasetCRUD
from .scalogram_crud import scalogram_crud, ScalogramCRUD
from .checkpoint_crud import checkpoint_crud, CheckpointCRUD
from .report_crud import report_crud, ReportCRUD

__all__ = ["dataset_crud", "DatasetCRUD", "scalogram_crud", "ScalogramCRUD", "checkpoint_crud", "CheckpointCRUD", "report_crud", "ReportCRUD"]
