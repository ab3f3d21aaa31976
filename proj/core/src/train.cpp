#include "saliency/train.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "saliency/rng.hpp"

namespace saliency {

std::vector<double> softmax(const Tensor& logits) {
    double hi = logits[0];
    for (double v : logits.data) hi = std::max(hi, v);
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(logits[i] - hi);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

namespace {

struct ParamGrads {
    std::vector<Tensor> weights;
    std::vector<Tensor> bias;
};

ParamGrads zero_grads(const Network& net) {
    ParamGrads g;
    g.weights.reserve(net.layers.size());
    g.bias.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        if (l.parameterized()) {
            g.weights.push_back(Tensor::zeros(l.weights.shape));
            g.bias.push_back(Tensor::zeros(l.bias.shape));
        } else {
            g.weights.emplace_back();
            g.bias.emplace_back();
        }
    }
    return g;
}

void accumulate_param_grads(const Layer& layer, const Tensor& input, const Tensor& grad_out,
                            Tensor& dw, Tensor& db) {
    if (layer.kind == LayerKind::Dense) {
        const std::size_t out = layer.weights.shape[0];
        const std::size_t in = layer.weights.shape[1];
        for (std::size_t k = 0; k < out; ++k) {
            const double gk = grad_out[k];
            if (gk == 0.0) continue;
            double* row = &dw.data[k * in];
            for (std::size_t j = 0; j < in; ++j) row[j] += gk * input[j];
            db[k] += gk;
        }
    } else if (layer.kind == LayerKind::Conv2D) {
        const std::size_t oc = layer.weights.shape[0];
        const std::size_t ic = layer.weights.shape[1];
        const std::size_t kh = layer.weights.shape[2];
        const std::size_t kw = layer.weights.shape[3];
        const std::size_t ih = input.shape[1], iw = input.shape[2];
        const std::size_t oh = grad_out.shape[1], ow = grad_out.shape[2];
        for (std::size_t o = 0; o < oc; ++o) {
            for (std::size_t i = 0; i < oh; ++i) {
                for (std::size_t j = 0; j < ow; ++j) {
                    const double go = grad_out.data[(o * oh + i) * ow + j];
                    if (go == 0.0) continue;
                    db[o] += go;
                    for (std::size_t c = 0; c < ic; ++c) {
                        for (std::size_t di = 0; di < kh; ++di) {
                            const double* xrow = &input.data[(c * ih + i + di) * iw + j];
                            double* krow = &dw.data[((o * ic + c) * kh + di) * kw];
                            for (std::size_t dj = 0; dj < kw; ++dj) {
                                krow[dj] += go * xrow[dj];
                            }
                        }
                    }
                }
            }
        }
    }
}

} // namespace

TrainReport train(Network& net, const LabeledDataset& ds, const TrainConfig& cfg) {
    if (ds.size() == 0) throw Error("train: empty dataset");
    if (cfg.batch_size == 0) throw Error("train: batch_size must be positive");
    if (ds.image_elems() != net.input_size()) {
        throw Error("train: image size " + std::to_string(ds.image_elems()) +
                    " does not match network input " + std::to_string(net.input_size()));
    }
    for (int l : ds.labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= net.num_classes) {
            throw Error("train: label " + std::to_string(l) + " outside [0, " +
                        std::to_string(net.num_classes) + ")");
        }
    }

    TrainReport report;
    if (cfg.epochs == 0) return report; // no-op by contract

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(cfg.seed, epoch));
        shuffle(order, shuffle_rng);

        double loss_sum = 0.0;
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t batch = std::min(cfg.batch_size, order.size() - pos);
            ParamGrads grads = zero_grads(net);

            for (std::size_t b = 0; b < batch; ++b) {
                const std::size_t idx = order[pos + b];
                const Tensor x = ds.image(idx).reshaped(net.input_shape);
                ForwardTrace trace;
                try {
                    trace = forward_trace(net, x);
                } catch (const Error& e) {
                    throw Error("train: diverged at epoch " + std::to_string(epoch) + " (" +
                                e.what() + "); learning rate " +
                                std::to_string(cfg.learning_rate) + " is likely too high");
                }
                const std::vector<double> p = softmax(trace.logits());
                const int label = ds.labels[idx];
                const double sample_loss = -std::log(p[static_cast<std::size_t>(label)]);
                if (!std::isfinite(sample_loss)) {
                    throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                                "; learning rate " + std::to_string(cfg.learning_rate) +
                                " is likely too high");
                }
                loss_sum += sample_loss;

                Tensor grad = Tensor::zeros({net.num_classes});
                for (std::size_t c = 0; c < net.num_classes; ++c) {
                    grad[c] = p[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);
                }
                for (std::size_t i = net.layers.size(); i-- > 0;) {
                    const Layer& layer = net.layers[i];
                    if (layer.parameterized()) {
                        accumulate_param_grads(layer, trace.inputs[i], grad, grads.weights[i],
                                               grads.bias[i]);
                    }
                    if (i > 0) grad = layer_backward_input(layer, trace.inputs[i], grad);
                }
            }

            const double scale = cfg.learning_rate / static_cast<double>(batch);
            for (std::size_t i = 0; i < net.layers.size(); ++i) {
                Layer& layer = net.layers[i];
                if (!layer.parameterized()) continue;
                for (std::size_t k = 0; k < layer.weights.size(); ++k) {
                    layer.weights[k] -= scale * grads.weights[i][k];
                }
                if (layer.bias_enabled) {
                    for (std::size_t k = 0; k < layer.bias.size(); ++k) {
                        layer.bias[k] -= scale * grads.bias[i][k];
                    }
                }
            }
            pos += batch;
        }

        const double epoch_loss = loss_sum / static_cast<double>(ds.size());
        if (!std::isfinite(epoch_loss)) {
            throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                        "; learning rate " + std::to_string(cfg.learning_rate) +
                        " is likely too high");
        }
        report.epoch_losses.push_back(epoch_loss);
    }

    report.final_train_accuracy = evaluate_accuracy(net, ds);
    return report;
}

double evaluate_accuracy(const Network& net, const LabeledDataset& ds) {
    if (ds.size() == 0) throw Error("evaluate_accuracy: empty dataset");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Tensor logits = forward(net, ds.image(i).reshaped(net.input_shape));
        if (argmax_logit(logits) == static_cast<std::size_t>(ds.labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(ds.size());
}

} // namespace saliency
