from ._core import (
    Dataset,
    GeneratorConfig,
    Graph,
    Model,
    TrainResult,
    TransportResult,
    ate_error,
    conformal_factor,
    default_config_json,
    exact_ot_oracle,
    exp_map,
    exp_map_origin,
    fitted_degree_tail_exponent,
    generate_dataset,
    generate_graph,
    gradient_check,
    hyp_distance,
    load_dataset,
    log_map,
    log_map_origin,
    mobius_add,
    pehe,
    predict_ite,
    project_to_ball,
    run_experiment,
    sinkhorn_distance,
    train,
)

__all__ = [
    "Dataset",
    "GeneratorConfig",
    "Graph",
    "Model",
    "TrainResult",
    "TransportResult",
    "ate_error",
    "conformal_factor",
    "default_config_json",
    "exact_ot_oracle",
    "exp_map",
    "exp_map_origin",
    "fitted_degree_tail_exponent",
    "generate_dataset",
    "generate_graph",
    "gradient_check",
    "hyp_distance",
    "load_dataset",
    "log_map",
    "log_map_origin",
    "mobius_add",
    "pehe",
    "predict_ite",
    "project_to_ball",
    "run_experiment",
    "sinkhorn_distance",
    "train",
]
