#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "errors.hpp"

namespace unistoch {

struct SimplexResult {
    std::vector<double> x;
    double value = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

struct SimplexOptions {
    double initial_step = 0.2;
    double size_tolerance = 1e-10;
    int max_iterations = 4000;
};

/// Nelder-Mead minimization (GSL nmsimplex2). Non-finite objective values count as +inf.
inline SimplexResult minimize_simplex(const std::function<double(const std::vector<double>&)>& f,
                                      const std::vector<double>& x0, const SimplexOptions& opt = {}) {
    const std::size_t n = x0.size();
    if (n == 0) throw InputError("simplex needs at least one variable");

    struct Context {
        const std::function<double(const std::vector<double>&)>* f;
        std::vector<double> buf;
    } ctx{&f, std::vector<double>(n)};

    gsl_multimin_function fn;
    fn.n = n;
    fn.params = &ctx;
    fn.f = [](const gsl_vector* v, void* p) -> double {
        auto* c = static_cast<Context*>(p);
        for (std::size_t i = 0; i < c->buf.size(); ++i) c->buf[i] = gsl_vector_get(v, i);
        const double y = (*c->f)(c->buf);
        return std::isfinite(y) ? y : std::numeric_limits<double>::max();
    };

    auto vec_deleter = [](gsl_vector* v) { gsl_vector_free(v); };
    std::unique_ptr<gsl_vector, decltype(vec_deleter)> x(gsl_vector_alloc(n), vec_deleter);
    std::unique_ptr<gsl_vector, decltype(vec_deleter)> step(gsl_vector_alloc(n), vec_deleter);
    for (std::size_t i = 0; i < n; ++i) gsl_vector_set(x.get(), i, x0[i]);
    gsl_vector_set_all(step.get(), opt.initial_step);

    auto min_deleter = [](gsl_multimin_fminimizer* s) { gsl_multimin_fminimizer_free(s); };
    std::unique_ptr<gsl_multimin_fminimizer, decltype(min_deleter)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), min_deleter);
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    if (gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), step.get()) != GSL_SUCCESS) {
        gsl_set_error_handler(previous);
        throw NumericalError("simplex initialization failed");
    }

    SimplexResult r;
    for (r.iterations = 0; r.iterations < opt.max_iterations; ++r.iterations) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), opt.size_tolerance) == GSL_SUCCESS) {
            r.converged = true;
            break;
        }
    }
    gsl_set_error_handler(previous);
    r.value = gsl_multimin_fminimizer_minimum(s.get());
    const gsl_vector* best = gsl_multimin_fminimizer_x(s.get());
    r.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.x[i] = gsl_vector_get(best, i);
    return r;
}

}  // namespace unistoch
