#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "iwocf/error.hpp"
#include "iwocf/eval.hpp"
#include "iwocf/iwo.hpp"
#include "iwocf/predictor.hpp"
#include "iwocf/ratings.hpp"
#include "iwocf/similarity.hpp"

namespace py = pybind11;
using namespace iwocf;

namespace {

using Triple = std::tuple<std::int64_t, std::int64_t, double>;

RatingMatrix matrix_from(const std::vector<Triple>& rows, std::optional<std::pair<double, double>> scale) {
    std::vector<RatingTriple> t;
    t.reserve(rows.size());
    for (const auto& [u, i, r] : rows) t.push_back({UserId{u}, ItemId{i}, r});
    if (scale) return RatingMatrix::from_triples(t, RatingScale{scale->first, scale->second});
    return RatingMatrix::from_triples(t);
}

std::vector<Triple> triples_of(const RatingMatrix& m) {
    std::vector<Triple> out;
    for (const auto& t : m.triples()) out.emplace_back(raw(t.user), raw(t.item), t.rating);
    return out;
}

py::list neighbors_of(const NeighborSet& set) {
    py::list out;
    for (const auto& n : set.neighbors) {
        py::dict d;
        d["user"] = raw(n.user);
        d["sim"] = n.sim;
        d["conf"] = n.conf;
        d["weight"] = n.weight;
        out.append(d);
    }
    return out;
}

py::list trace_of(const IwoTrace& trace) {
    py::list out;
    for (const auto& r : trace) out.append(py::make_tuple(r.t, r.best, r.worst, r.population, r.sigma));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Collaborative filtering with weed-optimised neighbour weights";

    static py::exception<Error> error(m, "IwocfError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const UnknownIdError& e) {
            PyErr_SetString(PyExc_KeyError, e.what());
        } catch (const Error& e) {
            error(e.what());
        }
    });

    py::class_<RatingMatrix>(m, "RatingMatrix")
        .def(py::init(&matrix_from), py::arg("triples"), py::arg("scale") = py::none(),
             "Build from (user, item, rating) tuples; the scale defaults to the observed range.")
        .def_property_readonly("n_users", &RatingMatrix::n_users)
        .def_property_readonly("n_items", &RatingMatrix::n_items)
        .def_property_readonly("n_ratings", &RatingMatrix::n_ratings)
        .def_property_readonly("scale", [](const RatingMatrix& r) {
            return std::make_pair(r.scale().min, r.scale().max);
        })
        .def_property_readonly("user_ids", [](const RatingMatrix& r) {
            std::vector<std::int64_t> ids;
            for (UserId u : r.user_ids()) ids.push_back(raw(u));
            return ids;
        })
        .def_property_readonly("item_ids", [](const RatingMatrix& r) {
            std::vector<std::int64_t> ids;
            for (ItemId i : r.item_ids()) ids.push_back(raw(i));
            return ids;
        })
        .def("rating", [](const RatingMatrix& r, std::int64_t u, std::int64_t i) {
            return r.rating(UserId{u}, ItemId{i});
        })
        .def("user_mean", [](const RatingMatrix& r, std::int64_t u) { return user_mean(r, UserId{u}); })
        .def("global_mean", &RatingMatrix::global_mean)
        .def("triples", &triples_of)
        .def("__len__", &RatingMatrix::n_ratings);

    m.def("load_ratings", [](const std::filesystem::path& path, const std::string& format) {
        return parse_ratings_file(path, parse_dataset_format(format));
    }, py::arg("path"), py::arg("format") = "generic");
    m.def("parse_ratings", [](const std::string& text, const std::string& format) {
        std::istringstream in(text);
        return parse_ratings(in, parse_dataset_format(format));
    }, py::arg("text"), py::arg("format") = "generic");
    m.def("split_ratings", [](const RatingMatrix& r, double fraction, std::uint64_t seed) {
        auto s = split_ratings(r, fraction, seed);
        return std::make_pair(std::move(s.train), std::move(s.test));
    }, py::arg("matrix"), py::arg("test_fraction") = 0.2, py::arg("seed") = 42);

    py::class_<SimilarityParams>(m, "SimilarityParams")
        .def(py::init<>())
        .def_readwrite("k", &SimilarityParams::k)
        .def_readwrite("theta", &SimilarityParams::theta);

    py::class_<IwoParams>(m, "IwoParams")
        .def(py::init<>())
        .def_readwrite("s_min", &IwoParams::s_min)
        .def_readwrite("s_max", &IwoParams::s_max)
        .def_readwrite("sigma_initial", &IwoParams::sigma_initial)
        .def_readwrite("sigma_final", &IwoParams::sigma_final)
        .def_readwrite("modulation", &IwoParams::modulation)
        .def_readwrite("max_iterations", &IwoParams::max_iterations)
        .def_readwrite("pop_initial", &IwoParams::pop_initial)
        .def_readwrite("pop_max", &IwoParams::pop_max);

    m.def("pearson_sim", [](const RatingMatrix& r, std::int64_t u, std::int64_t v) {
        return pearson_sim(r, UserId{u}, UserId{v});
    });
    m.def("confidence", [](const RatingMatrix& r, std::int64_t u, std::int64_t v) {
        return confidence(r, UserId{u}, UserId{v});
    });
    m.def("combined_weight", &combined_weight, py::arg("sim"), py::arg("conf"),
          py::arg("params") = SimilarityParams{});
    m.def("select_important_users", [](const RatingMatrix& r, std::int64_t u, const SimilarityParams& p) {
        return neighbors_of(select_important_users(r, UserId{u}, p));
    }, py::arg("matrix"), py::arg("user"), py::arg("params") = SimilarityParams{});

    m.def("seed_count", &seed_count, py::arg("f"), py::arg("f_best"), py::arg("f_worst"),
          py::arg("params") = IwoParams{});
    m.def("sigma_at", &sigma_at, py::arg("t"), py::arg("params") = IwoParams{});
    m.def("optimize", [](const std::function<double(std::vector<double>)>& objective, std::size_t dim,
                         const IwoParams& params, std::uint64_t seed,
                         const std::vector<std::vector<double>>& initial) {
        const auto r = optimize([&](std::span<const double> x) {
            return objective(std::vector<double>(x.begin(), x.end()));
        }, dim, params, seed, initial);
        py::dict d;
        d["position"] = r.best.position;
        d["fitness"] = r.best.fitness;
        d["evaluations"] = r.evaluations;
        d["trace"] = trace_of(r.trace);
        return d;
    }, py::arg("objective"), py::arg("dim"), py::arg("params") = IwoParams{}, py::arg("seed") = 1,
       py::arg("initial") = std::vector<std::vector<double>>{},
       "Minimise objective(list[float]) over [0, 1]^dim.");

    py::class_<UserModel>(m, "UserModel")
        .def_property_readonly("target", [](const UserModel& u) { return raw(u.target); })
        .def_property_readonly("neighbors", [](const UserModel& u) { return neighbors_of(u.neighbor_set); })
        .def_readonly("weights", &UserModel::weights)
        .def_readonly("fitness", &UserModel::fitness_achieved)
        .def_readonly("fallback_only", &UserModel::fallback_only)
        .def("__str__", &format_user_model);

    m.def("fit_user", [](const RatingMatrix& train, std::int64_t u, const SimilarityParams& sim,
                         const IwoParams& iwo, std::uint64_t seed, double holdout) {
        py::gil_scoped_release release;
        return fit_user_weights(train, UserId{u}, sim, iwo, seed, holdout);
    }, py::arg("train"), py::arg("user"), py::arg("sim") = SimilarityParams{},
       py::arg("iwo") = IwoParams{}, py::arg("seed") = 1, py::arg("holdout_fraction") = 0.25);
    m.def("uniform_model", [](const RatingMatrix& train, std::int64_t u, const SimilarityParams& sim) {
        return uniform_model(train, UserId{u}, sim);
    }, py::arg("train"), py::arg("user"), py::arg("sim") = SimilarityParams{});
    m.def("predict_rating", [](const RatingMatrix& train, const UserModel& model, std::int64_t item) {
        return predict_rating(train, model, ItemId{item});
    });
    m.def("fallback_prediction", [](const RatingMatrix& train, std::int64_t u, std::int64_t i) {
        const auto f = fallback_prediction(train, UserId{u}, ItemId{i});
        return std::make_pair(f.value, std::string(to_string(f.tier)));
    });

    m.def("run_experiment_json", [](const RatingMatrix& data, const std::string& baseline,
                                    const std::string& dataset, const std::string& format,
                                    const SimilarityParams& sim, const IwoParams& iwo,
                                    double split_fraction, std::uint64_t split_seed,
                                    double holdout, std::uint64_t global_seed, unsigned workers,
                                    std::optional<std::size_t> sample, std::uint64_t sample_seed) {
        ExperimentConfig c;
        c.dataset = dataset;
        c.format = parse_dataset_format(format);
        c.baseline = parse_baseline(baseline);
        c.sim = sim;
        c.iwo = iwo;
        c.split = {split_fraction, split_seed};
        c.fitness_holdout_fraction = holdout;
        c.global_seed = global_seed;
        c.workers = workers;
        c.sample_users = sample;
        c.sample_seed = sample_seed;
        std::ostringstream out;
        {
            py::gil_scoped_release release;
            write_report_json(out, run_experiment(data, c));
        }
        return out.str();
    });
}
