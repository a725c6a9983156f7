from prometheus_client import Counter, Histogram

# Stage durations
stage_duration_ms = Histogram(
    'groundgen_stage_duration_ms', 'Duration of pipeline stages (ms)',
    ['stage'], buckets=(50, 100, 250, 500, 1000, 5000, 10000, 30000, 120000, 600000)
)

# Grounding
retrieval_latency_ms = Histogram(
    'groundgen_retrieval_latency_ms', 'Latency of moment retrieval over the corpus (ms)',
    buckets=(5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000)
)

# Fine-tuning (LoRA and personalization)
finetune_duration_ms = Histogram(
    'groundgen_finetune_duration_ms', 'Duration of denoiser fine-tunes (ms)',
    ['kind'], buckets=(100, 500, 1000, 5000, 10000, 30000, 120000)
)

# Output
frames_written_total = Counter(
    'groundgen_frames_written_total', 'Total frames written to run outputs', ['source']
)

plugin_failure_total = Counter(
    'groundgen_plugin_failure_total', 'Total failed quality-metric plugin runs', ['plugin']
)

runs_total = Counter(
    'groundgen_runs_total', 'Total pipeline runs by outcome', ['outcome']
)
