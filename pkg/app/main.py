from __future__ import annotations

from dataclasses import replace
from datetime import datetime
from pathlib import Path
from uuid import uuid4
import json
import logging
import tempfile
import traceback

from fastapi import FastAPI, Request, Depends, Form, UploadFile, File
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse, RedirectResponse, Response
from fastapi.templating import Jinja2Templates
from starlette.concurrency import run_in_threadpool

from sqlalchemy.orm import Session

from . import __version__
from .bench import CVConfig, ExperimentReport, make_sampler, metric_grid, resample_dataset, run_experiment
from .config import settings
from .dataset import Dataset, load_csv, write_csv
from .db import engine, Base, get_db
from .errors import DegenerateDataError, ValidationError
from .middleware import RequestLogMiddleware
from .models import ExperimentRun
from .nnet import TrainConfig
from .nus import NusConfig
from .storage import ensure_bucket_exists, upload_bytes, presigned_get_url, report_key, s3_enabled


log = logging.getLogger("resamplelab")
logging.basicConfig(level=settings.log_level)

app = FastAPI(title=f"ResampleLab v{__version__}")
app.add_middleware(RequestLogMiddleware)

templates = Jinja2Templates(directory=str(Path(__file__).parent / "templates"))


@app.exception_handler(ValidationError)
async def validation_error_handler(request: Request, exc: ValidationError):
    return PlainTextResponse(f"{type(exc).__name__}: {exc}", status_code=422)


@app.exception_handler(DegenerateDataError)
async def degenerate_data_handler(request: Request, exc: DegenerateDataError):
    return PlainTextResponse(f"{type(exc).__name__}: {exc}", status_code=409)


def utcnow() -> datetime:
    return datetime.utcnow()


def _clean_str(v) -> str:
    return (v or "").strip()


def _csv_list(v: str) -> list[str]:
    return list(dict.fromkeys(p.strip() for p in _clean_str(v).split(",") if p.strip()))


def _log_exception(prefix: str, ex: Exception) -> None:
    log.error("%s: %s", prefix, ex)
    log.error(traceback.format_exc())


async def _read_upload(file: UploadFile, label: str) -> Dataset:
    """Parse an uploaded CSV through the same loader the CLI uses."""
    content = await file.read()
    original = Path(file.filename or "upload.csv").name
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / original
        path.write_bytes(content)
        d = load_csv(path, _clean_str(label))

    if d.n > settings.max_upload_rows:
        raise ValidationError(f"{d.n} rows exceeds the upload limit of {settings.max_upload_rows}")
    return replace(d, name=Path(original).stem or "upload")


def _nus_config(threshold_mode: str, nn_threshold: int | None, max_epochs: int) -> NusConfig:
    return NusConfig(
        threshold=settings.nn_threshold if nn_threshold is None else nn_threshold,
        threshold_mode=_clean_str(threshold_mode) or "or_both",
        train=TrainConfig(max_epochs=max_epochs),
    )


def _report_tables(report: ExperimentReport) -> list[dict]:
    tables = []
    for metric in report.provenance.get("metrics", []):
        classifiers, grid = metric_grid(report, metric)
        lines = [{"sampler": s, "cells": cells} for s, cells in grid]
        tables.append({"metric": metric, "classifiers": classifiers, "lines": lines})
    return tables


# ------------------------------------------------
# Startup
# ------------------------------------------------
@app.on_event("startup")
def startup():
    Base.metadata.create_all(bind=engine)
    try:
        ensure_bucket_exists()
    except Exception as ex:
        # reports still land in the database without the object store
        _log_exception("ensure_bucket_exists", ex)


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__, "report_store": "s3" if s3_enabled() else "database"}


# ------------------------------------------------
# Resampling
# ------------------------------------------------
@app.post("/resample")
async def resample_upload(
    file: UploadFile = File(...),
    label: str = Form(...),
    method: str = Form(...),
    seed: int = Form(settings.default_seed),
    k: int = Form(3),
    threshold_mode: str = Form("or_both"),
    nn_threshold: int | None = Form(None),
    max_epochs: int = Form(TrainConfig.max_epochs),
):
    d = await _read_upload(file, label)
    method_n = _clean_str(method).lower()
    make_sampler(method_n)  # unknown names fail before any training

    outcome = await run_in_threadpool(
        resample_dataset, d, method_n, seed, _nus_config(threshold_mode, nn_threshold, max_epochs), k
    )

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "balanced.csv"
        write_csv(outcome.balanced, path)
        body = path.read_bytes()

    return Response(
        content=body,
        media_type="text/csv",
        headers={
            "Content-Disposition": f'attachment; filename="{d.name}_{method_n}.csv"',
            "X-Kept-Majority": str(outcome.majority_count),
            "X-Kept-Minority": str(outcome.kept_minority.size),
        },
    )


# ------------------------------------------------
# Experiments
# ------------------------------------------------
@app.post("/evaluate")
async def evaluate_upload(
    db: Session = Depends(get_db),
    file: UploadFile = File(...),
    label: str = Form(...),
    methods: str = Form(...),
    classifiers: str = Form("knn,logreg,sgd"),
    metrics: str = Form("auc,gmean,f1"),
    folds: int = Form(5),
    repeats: int = Form(10),
    seed: int = Form(settings.default_seed),
    scope: str = Form("train_only"),
    k: int = Form(3),
    threshold_mode: str = Form("or_both"),
    nn_threshold: int | None = Form(None),
    max_epochs: int = Form(TrainConfig.max_epochs),
):
    d = await _read_upload(file, label)
    nus_config = _nus_config(threshold_mode, nn_threshold, max_epochs)
    method_list = _csv_list(methods)
    samplers = {name: make_sampler(name, nus_config, k=k) for name in method_list}
    classifier_list = _csv_list(classifiers)
    metric_list = _csv_list(metrics)
    cv = CVConfig(folds=folds, repeats=repeats, seed=seed, resample_scope=_clean_str(scope))

    report = await run_in_threadpool(run_experiment, d, samplers, classifier_list, metric_list, cv)
    report_json = report.to_json()
    prov = report.provenance

    run_id = str(uuid4())
    key = None
    try:
        candidate = report_key(run_id, d.name, utcnow().strftime("%Y-%m"))
        if upload_bytes(key=candidate, data=report_json.encode("utf-8"), content_type="application/json"):
            key = candidate
    except Exception as ex:
        _log_exception("evaluate report upload", ex)

    run = ExperimentRun(
        id=run_id,
        dataset_name=d.name,
        n_rows=d.n,
        n_minority=int(prov["n_minority"]),
        samplers=",".join(method_list),
        classifiers=",".join(classifier_list),
        metrics=",".join(metric_list),
        folds=cv.folds,
        repeats=cv.repeats,
        seed=cv.seed,
        resample_scope=cv.resample_scope,
        config_json=json.dumps({
            "k": k,
            "threshold_mode": nus_config.threshold_mode,
            "nn_threshold": nus_config.threshold,
            "max_epochs": max_epochs,
        }, sort_keys=True),
        report_json=report_json,
        s3_key=key,
        created_at=utcnow(),
    )
    try:
        db.add(run)
        db.commit()
    except Exception as ex:
        db.rollback()
        _log_exception("evaluate persist", ex)
        return PlainTextResponse("could not store the run", status_code=500)

    log.info("run %s stored (%s, %d skipped folds)", run_id, d.name, len(report.skipped))
    return JSONResponse({"run_id": run_id, "report": report.to_dict()})


@app.get("/runs", response_class=HTMLResponse)
def runs_page(request: Request, db: Session = Depends(get_db)):
    runs = db.query(ExperimentRun).order_by(ExperimentRun.created_at.desc()).all()
    return templates.TemplateResponse(request, "runs.html", {"request": request, "runs": runs})


@app.get("/runs/{run_id}", response_class=HTMLResponse)
def run_page(run_id: str, request: Request, db: Session = Depends(get_db)):
    run = db.get(ExperimentRun, run_id)
    if not run:
        return PlainTextResponse("run not found", status_code=404)

    report = ExperimentReport.from_dict(json.loads(run.report_json))
    return templates.TemplateResponse(
        request,
        "run.html",
        {
            "request": request,
            "run": run,
            "config": json.loads(run.config_json),
            "tables": _report_tables(report),
            "skipped": report.skipped,
        },
    )


@app.get("/runs/{run_id}/report")
def run_report(run_id: str, db: Session = Depends(get_db)):
    run = db.get(ExperimentRun, run_id)
    if not run:
        return PlainTextResponse("run not found", status_code=404)

    if run.s3_key and s3_enabled():
        url = presigned_get_url(run.s3_key, expires_seconds=3600)
        return RedirectResponse(url=url, status_code=302)
    return Response(content=run.report_json, media_type="application/json")
