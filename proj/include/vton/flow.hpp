#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vton/array.hpp"
#include "vton/layout.hpp"
#include "vton/model.hpp"
#include "vton/synthwear.hpp"

namespace vton {

// linear rectified-flow schedule: sigma_k = k / steps, sigma_T = 1, sigma_0 = 0
struct NoiseSchedule {
    int steps = 28;
    std::vector<float> sigmas;  // index k in [0, steps]

    static NoiseSchedule linear(int steps);
    float sigma(int k) const { return sigmas[static_cast<size_t>(k)]; }
};

// z_t = (1 - t) z0 + t z1
Array interpolate(const Array& z0, const Array& z1, float t);
// constant displacement z1 - z0
Array target_velocity(const Array& z0, const Array& z1);
// z_{t-1} = z_t + (sigma_prev - sigma_t) * v
Array euler_step(const Array& z_t, const Array& v, float sigma_t, float sigma_prev);
// z0_hat = z_t - sigma_t * v (differentiable when a tape is given)
Array predict_x0(Tape* tape, const Array& z_t, const Array& v, float sigma_t);

struct TemperatureParams {
    double alpha = 1.0;
    double beta = 0.43;
    double c = 1.0;
    int64_t n_train = 0;  // token count recorded at training time
};

// adjusted attention temperature:
// sqrt(1/d) * sqrt(alpha * log(N_infer)/log(N_train))
//           * sqrt(log(N_mask + c)/log(beta * N_garment + c))
// Exactly equals the 1/sqrt(d) base when both correction factors are 1.
float temperature(int d, int64_t n_infer, int64_t n_train, int64_t n_mask, int64_t n_garment, double alpha,
                  double beta, double c);

// one element of a training batch; draw_seed keys the per-sample randomness
// (t, z1, task assignment, mask augmentation) so duplicated samples under a
// fixed seed produce identical losses
struct TrainingExample {
    const SamplePair* pair = nullptr;
    TaskToken task;
    uint64_t draw_seed = 0;
    bool augment = false;
};

struct LossInfo {
    Array loss_node;  // [1], recorded on the tape when one was given
    double loss = 0.0;
    double loss_on = 0.0;
    double loss_off = 0.0;
    int count_on = 0;
    int count_off = 0;
};

// Eq.-style unified objective: mean squared error between the predicted
// velocity and z1 - z0, averaged over tokens and the batch. masked_only
// restricts the average to masked-region latent cells.
LossInfo training_loss(const ModelParams& params, const std::vector<TrainingExample>& batch, Tape* tape,
                       bool masked_only = false);

struct SampleInputs {
    Image garment;
    Image person;
    MaskCanvas mask;
    TaskToken task;
    // garment-side tight mask, required only by the detail correction step
    std::optional<Image> garment_tight;
};

struct SampleOptions {
    uint64_t seed = 1;
    bool temp_scale = false;
    TemperatureParams temp;
    std::ostream* trace = nullptr;  // JSONL: step, sigma, latent norm
};

// T Euler steps from seeded noise; condition pixels are copied back from the
// input canvas and generated pixels fill the masked region.
Canvas sample(const ModelParams& params, const SampleInputs& inputs, const NoiseSchedule& schedule,
              const SampleOptions& options);

enum class CorrectionMask { full_tryoff, garment_tight };
CorrectionMask parse_correction_mask(const std::string& s);
std::string to_string(CorrectionMask m);

struct CorrectionPlan {
    std::vector<double> fractions = {5.0 / 28.0, 17.0 / 28.0};  // of elapsed steps
    int iterations = 5;
    double eta0 = 0.1;
    std::vector<CorrectionMask> masks = {CorrectionMask::full_tryoff, CorrectionMask::garment_tight};

    void validate() const;
    // 1-based step indices counted from the start of sampling
    std::vector<int> step_indices(int total_steps) const;
};

struct CorrectionTraceEntry {
    int step_index = 0;      // elapsed sampling step (1-based)
    int iteration = 0;       // refinement iteration (1-based)
    double objective = 0.0;  // before the update
    double objective_after = 0.0;
    double eta = 0.0;        // accepted step size (0 when no step was taken)
};

struct SelfCorrectResult {
    Canvas canvas;
    std::vector<CorrectionTraceEntry> corrections;
};

// try-on sampling with Alg.-style correction: at each correction step the
// in-progress prediction is re-encoded as a try-off conditioning and z_t
// descends the reconstruction objective under a backtracking step size.
SelfCorrectResult self_corrective_sample(const ModelParams& params, const SampleInputs& inputs,
                                         const CorrectionPlan& plan, const NoiseSchedule& schedule,
                                         const SampleOptions& options);

}  // namespace vton
