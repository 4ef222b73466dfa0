#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nullstate/cli.hpp"
#include "nullstate/network.hpp"
#include "nullstate/scenario.hpp"
#include "nullstate/symbolic.hpp"

namespace py = pybind11;
using namespace nullstate;

namespace {

packet::ContextCode context_of(const std::string& bits) {
    if (bits.size() != 5) throw packet::codec_error(packet::codec_error::kind::frame, "context must be 5 bits: " + bits);
    return {static_cast<std::uint8_t>(packet::from_bits(bits))};
}

py::dict dispatch_frame(const std::string& frame, const std::string& table) {
    const auto t = table.empty() ? symbolic::build_table({}) : symbolic::FunctionTable::parse(table);
    const auto r = symbolic::dispatch(packet::parse_input(frame), t);
    py::dict d;
    if (r.is_output()) {
        d["output"] = packet::format_output(r.output());
        return d;
    }
    const auto& n = r.null_state();
    d["null"] = std::string(symbolic::null_reason_name(n.reason));
    d["malformation"] = n.malformation ? py::cast(std::string(packet::malformation_name(*n.malformation))) : py::none();
    d["candidate"] = n.candidate ? py::cast(packet::to_bits(n.candidate->verb, 6)) : py::none();
    d["detail"] = n.detail;
    return d;
}

py::dict train_square(std::uint64_t seed, std::size_t epochs, const std::string& context) {
    neural::TrainConfig cfg;
    cfg.seed = seed;
    cfg.epochs = epochs;
    const auto samples = neural::square_lesson(context_of(context));
    const auto r = neural::train(neural::Network::make(neural::kDefaultWidths, neural::kDefaultBiasFloor, seed), samples, cfg);
    py::dict d;
    d["converged"] = r.converged;
    d["epochs_run"] = r.epochs_run;
    d["accuracy"] = neural::accuracy(r.net, samples);
    d["checkpoint"] = neural::write_checkpoint(r.net);
    return d;
}

std::string predict(const std::string& checkpoint, const std::string& frame) {
    const auto net = neural::read_checkpoint(checkpoint);
    return packet::format_output(neural::forward(net, neural::input_bits(packet::parse_input(frame))).candidate);
}

std::string scenario_json(const std::string& name, std::uint64_t seed) {
    if (!scenario::is_scenario(name)) throw std::invalid_argument("unknown scenario: " + name);
    auto cfg = scenario::default_config(name);
    cfg.seed = seed;
    return cli::report_json(scenario::run(cfg), cli::config_hash(cli::to_json(cfg)));
}

}  // namespace

PYBIND11_MODULE(_nullstate, m) {
    py::register_exception<packet::codec_error>(m, "CodecError", PyExc_ValueError);

    m.attr("version") = std::string(cli::kVersion);
    m.def("encode_input", [](const std::string& t) { return packet::encode_input(packet::parse_input(t)); });
    m.def("decode_input", [](const std::string& b) { return packet::format_input(packet::decode_input(b)); });
    m.def("f_verb", &symbolic::f_verb);
    m.def("f_square", &symbolic::f_square);
    m.def("oracle_answer", [](const std::string& t) -> std::optional<std::string> {
        const auto a = symbolic::oracle_answer(packet::parse_input(t));
        if (!a) return std::nullopt;
        return packet::format_output(*a);
    });
    m.def("default_table", [](int functions, int person_dependent, int photo_tolerant, int location_dependent,
                              int memory_readable) {
        return symbolic::build_table({functions, person_dependent, photo_tolerant, location_dependent, memory_readable})
            .serialize();
    }, py::arg("functions") = 10, py::arg("person_dependent") = 8, py::arg("photo_tolerant") = 2,
       py::arg("location_dependent") = 0, py::arg("memory_readable") = 1);
    m.def("dispatch", &dispatch_frame, py::arg("frame"), py::arg("table") = "");
    m.def("functionality", [](const std::string& table, const std::string& context) {
        return symbolic::functionality(symbolic::FunctionTable::parse(table), context_of(context));
    });
    m.def("train_square", &train_square, py::arg("seed") = 1, py::arg("epochs") = neural::TrainConfig{}.epochs,
          py::arg("context") = "10000");
    m.def("predict", &predict);
    m.def("scenario_json", &scenario_json, py::arg("name"), py::arg("seed") = 1);
    m.def("scenario_names", [] {
        std::vector<std::string> v;
        for (auto n : scenario::kScenarioNames) v.emplace_back(n);
        return v;
    });
}
