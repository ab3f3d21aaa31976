#include "saliency/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "saliency/stats.hpp"

namespace saliency {

const char* method_name(Method m) {
    switch (m) {
        case Method::GradInput: return "gradinput";
        case Method::CGI: return "cgi";
        case Method::LRP: return "lrp";
        case Method::CLRP: return "clrp";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    if (name == "gradinput") return Method::GradInput;
    if (name == "cgi") return Method::CGI;
    if (name == "lrp") return Method::LRP;
    if (name == "clrp") return Method::CLRP;
    return std::nullopt;
}

void MapStack::validate() const {
    if (maps.empty()) throw Error("map stack: empty");
    if (chosen >= maps.size()) throw Error("map stack: chosen label out of range");
    for (std::size_t i = 0; i < maps.size(); ++i) {
        if (maps[i].node != i) throw Error("map stack: node indices must be 0..C-1 in order");
        if (maps[i].method != maps.front().method) {
            throw Error("map stack: mixed methods");
        }
        if (!same_shape(maps[i].scores.shape, maps.front().scores.shape)) {
            throw Error("map stack: mixed shapes");
        }
    }
}

MapStack grad_input_stack(const Network& net, const Tensor& x,
                          std::optional<std::size_t> chosen) {
    const ForwardTrace trace = forward_trace(net, x);
    const std::size_t picked = chosen.value_or(argmax_logit(trace.logits()));
    if (picked >= net.num_classes) throw Error("grad_input_stack: chosen label out of range");

    MapStack stack;
    stack.chosen = picked;
    stack.maps.reserve(net.num_classes);
    for (std::size_t c = 0; c < net.num_classes; ++c) {
        Tensor grad = input_gradient(net, trace, c);
        for (std::size_t j = 0; j < grad.size(); ++j) grad[j] *= x[j];
        ensure_finite(grad, "grad_input_stack");
        stack.maps.push_back({std::move(grad), Method::GradInput, c});
    }
    return stack;
}

namespace {

inline double stabilize(double z, double epsilon) {
    return z + (z >= 0.0 ? epsilon : -epsilon);
}

/// Relevance pushed from a layer's output back to its input.
Tensor layer_backward_relevance(const Layer& layer, const Tensor& input, const Tensor& out,
                                const Tensor& relevance, double epsilon) {
    switch (layer.kind) {
        case LayerKind::Dense: {
            const std::size_t n_out = layer.weights.shape[0];
            const std::size_t n_in = layer.weights.shape[1];
            Tensor r = Tensor::zeros(input.shape);
            for (std::size_t k = 0; k < n_out; ++k) {
                const double rk = relevance[k];
                if (rk == 0.0) continue;
                const double f = rk / stabilize(out[k], epsilon);
                const double* row = &layer.weights.data[k * n_in];
                for (std::size_t j = 0; j < n_in; ++j) {
                    r[j] += input[j] * row[j] * f;
                }
            }
            return r;
        }
        case LayerKind::Conv2D: {
            const std::size_t oc = layer.weights.shape[0];
            const std::size_t ic = layer.weights.shape[1];
            const std::size_t kh = layer.weights.shape[2];
            const std::size_t kw = layer.weights.shape[3];
            const std::size_t ih = input.shape[1], iw = input.shape[2];
            const std::size_t oh = out.shape[1], ow = out.shape[2];
            Tensor r = Tensor::zeros(input.shape);
            for (std::size_t o = 0; o < oc; ++o) {
                for (std::size_t i = 0; i < oh; ++i) {
                    for (std::size_t j = 0; j < ow; ++j) {
                        const double rk = relevance.data[(o * oh + i) * ow + j];
                        if (rk == 0.0) continue;
                        const double f = rk / stabilize(out.data[(o * oh + i) * ow + j], epsilon);
                        for (std::size_t c = 0; c < ic; ++c) {
                            for (std::size_t di = 0; di < kh; ++di) {
                                const double* xrow = &input.data[(c * ih + i + di) * iw + j];
                                double* rrow = &r.data[(c * ih + i + di) * iw + j];
                                const double* krow =
                                    &layer.weights.data[((o * ic + c) * kh + di) * kw];
                                for (std::size_t dj = 0; dj < kw; ++dj) {
                                    rrow[dj] += xrow[dj] * krow[dj] * f;
                                }
                            }
                        }
                    }
                }
            }
            return r;
        }
        case LayerKind::ReLU:
            return relevance; // passes through unchanged
        case LayerKind::Flatten:
            return relevance.reshaped(input.shape);
    }
    throw Error("unreachable layer kind");
}

} // namespace

std::vector<Tensor> lrp_relevances(const Network& net, const ForwardTrace& trace,
                                   std::size_t node, double epsilon) {
    if (epsilon <= 0.0) throw Error("lrp: epsilon must be > 0");
    if (node >= net.num_classes) throw Error("lrp: node out of range");

    Tensor r = Tensor::zeros({net.num_classes});
    r[node] = trace.logits()[node];

    std::vector<Tensor> per_layer;
    per_layer.reserve(net.layers.size() + 1);
    per_layer.push_back(r);
    for (std::size_t i = net.layers.size(); i-- > 0;) {
        r = layer_backward_relevance(net.layers[i], trace.inputs[i], trace.outputs[i], r,
                                     epsilon);
        per_layer.push_back(r);
    }
    return per_layer;
}

MapStack lrp_stack(const Network& net, const Tensor& x, double epsilon,
                   std::optional<std::size_t> chosen) {
    if (epsilon <= 0.0) throw Error("lrp: epsilon must be > 0");
    const ForwardTrace trace = forward_trace(net, x);
    const std::size_t picked = chosen.value_or(argmax_logit(trace.logits()));
    if (picked >= net.num_classes) throw Error("lrp_stack: chosen label out of range");

    MapStack stack;
    stack.chosen = picked;
    stack.maps.reserve(net.num_classes);
    for (std::size_t c = 0; c < net.num_classes; ++c) {
        Tensor scores = lrp_relevances(net, trace, c, epsilon).back();
        ensure_finite(scores, "lrp_stack");
        stack.maps.push_back({std::move(scores), Method::LRP, c});
    }
    return stack;
}

namespace {

SaliencyMap competitive_select(const MapStack& stack, Method out_method) {
    stack.validate();
    const SaliencyMap& own = stack.chosen_map();
    SaliencyMap result{Tensor::zeros(own.scores.shape), out_method, own.node};

    const std::size_t d = own.scores.size();
    for (std::size_t j = 0; j < d; ++j) {
        const double s = own.scores[j];
        if (s == 0.0) continue;
        bool wins = true;
        if (s > 0.0) {
            for (std::size_t i = 0; i < stack.maps.size(); ++i) {
                if (i != stack.chosen && s < stack.maps[i].scores[j]) {
                    wins = false;
                    break;
                }
            }
        } else {
            for (std::size_t i = 0; i < stack.maps.size(); ++i) {
                if (i != stack.chosen && s > stack.maps[i].scores[j]) {
                    wins = false;
                    break;
                }
            }
        }
        if (wins) result.scores[j] = s;
    }
    return result;
}

} // namespace

SaliencyMap cgi(const MapStack& stack) {
    if (stack.method() != Method::GradInput) {
        throw Error("cgi: stack method must be gradinput");
    }
    return competitive_select(stack, Method::CGI);
}

SaliencyMap clrp(const MapStack& stack) {
    if (stack.method() != Method::LRP) {
        throw Error("clrp: stack method must be lrp");
    }
    return competitive_select(stack, Method::CLRP);
}

SaliencyMap compute_map(const Network& net, const Tensor& x, Method method,
                        std::optional<std::size_t> chosen, double lrp_epsilon) {
    switch (method) {
        case Method::GradInput: return grad_input_stack(net, x, chosen).chosen_map();
        case Method::CGI: return cgi(grad_input_stack(net, x, chosen));
        case Method::LRP: return lrp_stack(net, x, lrp_epsilon, chosen).chosen_map();
        case Method::CLRP: return clrp(lrp_stack(net, x, lrp_epsilon, chosen));
    }
    throw Error("unreachable method");
}

CompletenessReport completeness_report(const Network& net, const Tensor& x,
                                       const MapStack& stack) {
    stack.validate();
    const Tensor logits = forward(net, x);
    if (logits.size() != stack.classes()) {
        throw Error("completeness_report: stack does not match network output");
    }

    CompletenessReport report;
    report.logits.assign(logits.data.begin(), logits.data.end());
    report.score_sums.reserve(stack.classes());
    report.residuals.reserve(stack.classes());
    for (std::size_t c = 0; c < stack.classes(); ++c) {
        double sum = 0.0;
        for (double v : stack.maps[c].scores.data) sum += v;
        report.score_sums.push_back(sum);
        report.residuals.push_back(report.logits[c] - sum);
    }

    if (stack.classes() >= 2) {
        const LinearFit fit = linear_fit(report.logits, report.score_sums);
        report.has_fit = fit.defined;
        report.slope = fit.slope;
        report.intercept = fit.intercept;
        report.pearson_r = fit.pearson_r;
    }
    return report;
}

void write_completeness_csv(const CompletenessReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("csv: cannot open " + path + " for writing");
    out.precision(17);
    out << "node,logit,score_sum,residual\n";
    for (std::size_t c = 0; c < report.logits.size(); ++c) {
        out << c << "," << report.logits[c] << "," << report.score_sums[c] << ","
            << report.residuals[c] << "\n";
    }
    out << "# fit";
    if (report.has_fit) {
        out << " slope=" << report.slope << " intercept=" << report.intercept
            << " pearson_r=" << report.pearson_r << "\n";
    } else {
        out << " undefined\n";
    }
}

StackDiagnostics stack_diagnostics(const MapStack& stack, double mass) {
    stack.validate();
    if (!(mass > 0.0 && mass <= 1.0)) throw Error("stack_diagnostics: mass must be in (0,1]");

    const std::size_t d = stack.maps.front().scores.size();
    StackDiagnostics diag;
    std::vector<std::vector<bool>> top_sets;
    top_sets.reserve(stack.classes());

    for (const SaliencyMap& map : stack.maps) {
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(map.scores[a]) > std::abs(map.scores[b]);
        });
        double total = 0.0;
        for (double v : map.scores.data) total += std::abs(v);

        std::vector<bool> in_top(d, false);
        std::size_t count = 0;
        double acc = 0.0;
        if (total > 0.0) {
            for (std::size_t idx : order) {
                acc += std::abs(map.scores[idx]);
                in_top[idx] = true;
                ++count;
                if (acc >= mass * total) break;
            }
        }
        diag.top_mass_fraction.push_back(static_cast<double>(count) / static_cast<double>(d));
        top_sets.push_back(std::move(in_top));
    }

    double overlap_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < top_sets.size(); ++a) {
        for (std::size_t b = a + 1; b < top_sets.size(); ++b) {
            std::size_t both = 0;
            for (std::size_t j = 0; j < d; ++j) {
                if (top_sets[a][j] && top_sets[b][j]) ++both;
            }
            overlap_sum += static_cast<double>(both) / static_cast<double>(d);
            ++pairs;
        }
    }
    diag.pairwise_overlap = pairs ? overlap_sum / static_cast<double>(pairs) : 0.0;
    return diag;
}

} // namespace saliency
