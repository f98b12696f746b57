from datetime import datetime
from sqlalchemy import (
    Column,
    Integer,
    String,
    DateTime,
    Text,
    CheckConstraint,
)

from .db import Base


def utcnow():
    # helper so SQLAlchemy gets a callable
    return datetime.utcnow()


class ExperimentRun(Base):
    __tablename__ = "experiment_runs"

    id = Column(String, primary_key=True)
    dataset_name = Column(String, nullable=False)
    n_rows = Column(Integer, nullable=False)
    n_minority = Column(Integer, nullable=False)

    # CSV of names, in the order requested
    samplers = Column(Text, nullable=False)
    classifiers = Column(Text, nullable=False)
    metrics = Column(Text, nullable=False)

    folds = Column(Integer, nullable=False)
    repeats = Column(Integer, nullable=False)
    seed = Column(Integer, nullable=False)
    resample_scope = Column(String, nullable=False)  # train_only/whole_dataset
    config_json = Column(Text, nullable=False)  # sampler knobs as submitted

    report_json = Column(Text, nullable=False)
    s3_key = Column(String, nullable=True)  # set when the report was also uploaded

    created_at = Column(DateTime, default=utcnow, nullable=False)

    __table_args__ = (
        CheckConstraint("folds >= 2 AND repeats >= 1", name="ck_runs_cv_shape"),
    )
