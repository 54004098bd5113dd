// End-to-end miniature: generate an advection dataset, train a small CFNO
// surrogate, report one-step and rollout errors.

#include <cstdio>

#include "clifford/clifford.hpp"

using namespace clifford;

int main() {
    const TrajectorySet data = gen_advection2d(16, 20, VelocityLaw::constant, 0.5, 7, 8);
    std::printf("dataset: %lld trajectories x %lld steps on %lldx%ld grid\n",
                static_cast<long long>(data.trajectories()), static_cast<long long>(data.steps()),
                static_cast<long long>(data.spatial_shape()[0]),
                static_cast<long>(data.spatial_shape()[1]));

    SurrogateConfig cfg = SurrogateConfig::desk2d("cfno");
    cfg.grid = {16, 16};
    cfg.blocks = 2;
    cfg.channels = 8;
    cfg.modes = {4, 4};
    Model model = Model::create(cfg, 11);
    std::printf("cfno surrogate with %lld parameters\n",
                static_cast<long long>(model.parameter_count()));

    TrainConfig tc;
    tc.epochs = 8;
    tc.lr = 2e-3;
    tc.batch = 4;
    tc.seed = 13;
    const TrainResult result = train_model(std::move(model), data, tc);
    std::printf("one-step SMSE: %.4g -> %.4g\n", result.initial_train_smse, result.final_train_smse);

    const Metrics metrics = evaluate_model(result.model, data, 5);
    std::printf("metrics: onestep %.4g scalar %.4g vector %.4g rollout(5) %.4g\n",
                metrics.smse_onestep, metrics.smse_scalar, metrics.smse_vector, metrics.smse_rollout);
    return 0;
}
