import logging
from typing import List

from dotenv import load_dotenv
from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.middleware.cors import CORSMiddleware

from .distribution import distribution_check, spacing_lab
from .experiments import EXPERIMENTS, run_experiment
from .measure import m_value
from .melody import decompose
from .models import (
    ENTROPY_MODES,
    AestheticScore,
    CheckRequest,
    Decomposition,
    DistributionCheck,
    ExperimentReport,
    PermutationReport,
    Piece,
    RegisterPolicy,
    SearchConfig,
    SpacingLabReport,
    SpacingLabRequest,
    SurmiseParams,
    SweepReport,
)
from .piece_io import detect_format, normalize_register, parse_pieces
from .search import energy_sweep, permutation_experiment
from .utils import REGISTER_HIGH_HZ, REGISTER_LOW_HZ, cache_response

load_dotenv()

logger = logging.getLogger(__name__)

app = FastAPI(title="Melody Aesthetics API", version="1.0.0")

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

EntropyQuery = Query("cw", pattern="^(cw|shannon)$")


@app.get("/")
async def root():
    return {"message": "Melody Aesthetics API"}


@app.post("/api/decompose", response_model=Decomposition)
async def decompose_piece(piece: Piece):
    """Levels of a piece"""
    return decompose(piece)


@app.post("/api/score", response_model=AestheticScore)
async def score_piece(piece: Piece, entropy: str = EntropyQuery):
    """Per-level entropy, energy, ratio and M"""
    try:
        return m_value(piece, ENTROPY_MODES[entropy])
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Scoring failed: {str(e)}")


@app.post("/api/check", response_model=DistributionCheck)
async def check_piece(request: CheckRequest):
    """Cluster-signature check of the combined levels"""
    try:
        return distribution_check(decompose(request.piece), request.signature)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Distribution check failed: {str(e)}")


@app.post("/api/permute", response_model=PermutationReport)
def permute_piece(piece: Piece, entropy: str = EntropyQuery):
    """Score every arrangement of the piece's transitions"""
    return permutation_experiment(piece, mode=ENTROPY_MODES[entropy])


@app.post("/api/sweep", response_model=SweepReport)
def sweep(config: SearchConfig):
    """Rank every grid pattern at one energy level"""
    try:
        return energy_sweep(config)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Sweep failed: {str(e)}")


@app.post("/api/spacing-lab", response_model=SpacingLabReport)
def run_spacing_lab(request: SpacingLabRequest):
    """Entropy-energy ratio of every spacing multiset with a fixed count and sum"""
    try:
        return spacing_lab(
            request.count,
            request.target_sum,
            request.step,
            max_value=request.max_value,
            params=SurmiseParams(beta=request.beta),
        )
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Spacing lab failed: {str(e)}")


@app.post("/api/pieces/upload", response_model=List[AestheticScore])
async def upload_pieces(
    file: UploadFile = File(...),
    midi: bool = False,
    normalize: bool = True,
    entropy: str = EntropyQuery,
):
    """Score every piece of an uploaded structured or delimited document"""
    document = await file.read()
    policy = RegisterPolicy(low=REGISTER_LOW_HZ, high=REGISTER_HIGH_HZ, enabled=normalize)
    try:
        pieces = parse_pieces(document, detect_format(file.filename or ""), midi=midi)
        return [m_value(normalize_register(p, policy), ENTROPY_MODES[entropy]) for p in pieces]
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Upload failed: {str(e)}")


@cache_response()
def experiment_payload(experiment_id: str):
    return run_experiment(experiment_id)


@app.get("/api/experiments/{experiment_id}", response_model=ExperimentReport)
def get_experiment(experiment_id: str):
    """Run one of the canned reproductions"""
    if experiment_id not in EXPERIMENTS:
        raise HTTPException(status_code=404, detail=f"Unknown experiment: {experiment_id}")
    logger.info("running experiment %s", experiment_id)
    return experiment_payload(experiment_id)


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=8000)
