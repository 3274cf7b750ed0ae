#include "excite/excite.h"

#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "excite/error.hpp"
#include "excite/hawkes.hpp"
#include "excite/pipeline.hpp"
#include "excite/report.hpp"

struct excite_pipeline {
  excite::PipelineConfig config;
  std::unique_ptr<excite::Pipeline> last_run;
  std::string manifest_path;
};

struct excite_network {
  excite::HawkesNetwork net;
};

struct excite_process_set {
  excite::ProcessSet set;
};

struct excite_posterior {
  excite::PosteriorSummary summary;
};

namespace {

thread_local std::string last_error;

excite_status fail(excite_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
excite_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return EXCITE_OK;
  } catch (const excite::Error& e) {
    return fail(static_cast<excite_status>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(EXCITE_ERROR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(EXCITE_ERROR_INTERNAL, e.what());
  } catch (...) {
    return fail(EXCITE_ERROR_INTERNAL, "unknown error");
  }
}

#define EXCITE_REQUIRE(cond, what) \
  if (!(cond)) return fail(EXCITE_ERROR_INVALID_ARGUMENT, what)

template <class T>
void write_to(const char* path, T&& write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw excite::input_error(std::string("cannot write ") + path);
  write(out);
  out.close();
  if (!out) throw excite::input_error(std::string("failed writing ") + path);
}

}  // namespace

extern "C" {

const char* excite_version(void) { return "0.1.0"; }

const char* excite_status_string(excite_status status) {
  switch (status) {
    case EXCITE_OK: return "ok";
    case EXCITE_ERROR_INTERNAL: return "internal error";
    case EXCITE_ERROR_CONFIG: return "configuration error";
    case EXCITE_ERROR_INPUT: return "input error";
    case EXCITE_ERROR_NUMERIC: return "numeric error";
    case EXCITE_ERROR_INVALID_ARGUMENT: return "invalid argument";
  }
  return "unknown status";
}

const char* excite_last_error(void) { return last_error.c_str(); }

excite_status excite_pipeline_create(const char* config_path, excite_pipeline** out) {
  EXCITE_REQUIRE(out, "out is null");
  *out = nullptr;
  return guarded([&] {
    auto p = std::make_unique<excite_pipeline>();
    if (config_path) p->config = excite::PipelineConfig::load(config_path);
    *out = p.release();
  });
}

void excite_pipeline_destroy(excite_pipeline* pipeline) { delete pipeline; }

excite_status excite_pipeline_set_output_dir(excite_pipeline* pipeline, const char* dir) {
  EXCITE_REQUIRE(pipeline && dir && *dir, "pipeline and dir are required");
  pipeline->config.output_dir = dir;
  return EXCITE_OK;
}

excite_status excite_pipeline_set_seed(excite_pipeline* pipeline, uint64_t seed) {
  EXCITE_REQUIRE(pipeline, "pipeline is null");
  pipeline->config.seed = seed;
  return EXCITE_OK;
}

excite_status excite_pipeline_set_lenient(excite_pipeline* pipeline, int lenient) {
  EXCITE_REQUIRE(pipeline, "pipeline is null");
  pipeline->config.lenient = lenient != 0;
  return EXCITE_OK;
}

excite_status excite_pipeline_set_events_path(excite_pipeline* pipeline, const char* path) {
  EXCITE_REQUIRE(pipeline && path && *path, "pipeline and path are required");
  pipeline->config.events_path = path;
  return EXCITE_OK;
}

excite_status excite_pipeline_run(excite_pipeline* pipeline, excite_stage stage) {
  EXCITE_REQUIRE(pipeline, "pipeline is null");
  EXCITE_REQUIRE(stage >= EXCITE_STAGE_TOPICS && stage <= EXCITE_STAGE_ALL, "unknown stage");
  return guarded([&] {
    pipeline->last_run = std::make_unique<excite::Pipeline>(pipeline->config);
    pipeline->manifest_path = pipeline->last_run->manifest_path().string();
    switch (stage) {
      case EXCITE_STAGE_TOPICS: {
        const excite::Stage s[] = {excite::Stage::topics};
        pipeline->last_run->run(s);
        break;
      }
      case EXCITE_STAGE_EVENTS: {
        const excite::Stage s[] = {excite::Stage::events};
        pipeline->last_run->run(s);
        break;
      }
      case EXCITE_STAGE_FIT: {
        const excite::Stage s[] = {excite::Stage::fit};
        pipeline->last_run->run(s);
        break;
      }
      case EXCITE_STAGE_ALL: pipeline->last_run->run_all(); break;
    }
  });
}

size_t excite_pipeline_output_count(const excite_pipeline* pipeline) {
  return pipeline && pipeline->last_run ? pipeline->last_run->manifest().outputs.size() : 0;
}

const char* excite_pipeline_output(const excite_pipeline* pipeline, size_t index) {
  if (index >= excite_pipeline_output_count(pipeline)) return nullptr;
  return pipeline->last_run->manifest().outputs[index].c_str();
}

size_t excite_pipeline_warning_count(const excite_pipeline* pipeline) {
  return pipeline && pipeline->last_run ? pipeline->last_run->manifest().warnings.size() : 0;
}

const char* excite_pipeline_warning(const excite_pipeline* pipeline, size_t index) {
  if (index >= excite_pipeline_warning_count(pipeline)) return nullptr;
  return pipeline->last_run->manifest().warnings[index].c_str();
}

const char* excite_pipeline_manifest_path(const excite_pipeline* pipeline) {
  if (!pipeline || !pipeline->last_run) return nullptr;
  return pipeline->manifest_path.c_str();
}

excite_status excite_network_load(const char* json_path, excite_network** out) {
  EXCITE_REQUIRE(json_path && out, "path and out are required");
  *out = nullptr;
  return guarded([&] { *out = new excite_network{excite::load_network(json_path)}; });
}

excite_status excite_network_create(size_t processes, const char* const* labels, const double* lambda0,
                                    const double* weights_row_major, const size_t* basis_edges, size_t n_edges,
                                    excite_network** out) {
  EXCITE_REQUIRE(out, "out is null");
  *out = nullptr;
  EXCITE_REQUIRE(processes > 0 && lambda0 && weights_row_major, "processes, lambda0 and weights are required");
  EXCITE_REQUIRE(!basis_edges || n_edges > 0, "basis_edges needs n_edges > 0");
  return guarded([&] {
    std::vector<std::string> names;
    for (size_t i = 0; i < processes; ++i)
      names.push_back(labels && labels[i] ? std::string(labels[i]) : "p" + std::to_string(i));
    excite::Matrix w(processes, processes);
    for (size_t a = 0; a < processes; ++a)
      for (size_t b = 0; b < processes; ++b) w(a, b) = weights_row_major[a * processes + b];
    const auto basis = basis_edges ? excite::ImpulseBasis::boxcars({basis_edges, basis_edges + n_edges})
                                   : excite::ImpulseBasis::boxcars();
    auto net = excite::HawkesNetwork::with_uniform_impulse(
        std::move(names), std::vector<double>(lambda0, lambda0 + processes), std::move(w), basis);
    net.validate();
    *out = new excite_network{std::move(net)};
  });
}

void excite_network_destroy(excite_network* net) { delete net; }

size_t excite_network_size(const excite_network* net) { return net ? net->net.size() : 0; }

excite_status excite_spectral_radius(const excite_network* net, double* out) {
  EXCITE_REQUIRE(net && out, "net and out are required");
  return guarded([&] { *out = excite::spectral_radius(net->net.weights); });
}

excite_status excite_simulate(const excite_network* net, size_t n_buckets, uint64_t seed, excite_process_set** out) {
  EXCITE_REQUIRE(net && out, "net and out are required");
  *out = nullptr;
  return guarded([&] { *out = new excite_process_set{excite::simulate(net->net, n_buckets, seed)}; });
}

excite_status excite_process_set_read(const char* csv_path, excite_process_set** out) {
  EXCITE_REQUIRE(csv_path && out, "path and out are required");
  *out = nullptr;
  return guarded([&] { *out = new excite_process_set{excite::read_events(csv_path)}; });
}

excite_status excite_process_set_write(const excite_process_set* set, const char* csv_path) {
  EXCITE_REQUIRE(set && csv_path, "set and path are required");
  return guarded([&] { excite::write_events(csv_path, set->set); });
}

void excite_process_set_destroy(excite_process_set* set) { delete set; }

size_t excite_process_set_size(const excite_process_set* set) { return set ? set->set.streams.size() : 0; }

size_t excite_process_set_buckets(const excite_process_set* set) { return set ? set->set.grid.n_buckets : 0; }

const char* excite_process_set_label(const excite_process_set* set, size_t process) {
  if (!set || process >= set->set.streams.size()) return nullptr;
  return set->set.streams[process].label.c_str();
}

size_t excite_process_set_event_count(const excite_process_set* set, size_t process) {
  if (!set || process >= set->set.streams.size()) return 0;
  return set->set.streams[process].event_buckets.size();
}

size_t excite_process_set_events(const excite_process_set* set, size_t process, size_t* buckets, size_t capacity) {
  if (!set || process >= set->set.streams.size()) return 0;
  const auto& ev = set->set.streams[process].event_buckets;
  for (size_t i = 0; i < ev.size() && i < capacity && buckets; ++i) buckets[i] = ev[i];
  return ev.size();
}

excite_status excite_intensity(const excite_network* net, const excite_process_set* set, size_t process,
                               size_t bucket, double* out) {
  EXCITE_REQUIRE(net && set && out, "net, set and out are required");
  EXCITE_REQUIRE(net->net.size() == set->set.streams.size(), "network and process set sizes differ");
  EXCITE_REQUIRE(process < net->net.size() && bucket < set->set.grid.n_buckets, "process or bucket out of range");
  return guarded([&] { *out = excite::intensity(net->net, set->set, process, bucket); });
}

excite_status excite_log_likelihood(const excite_network* net, const excite_process_set* set, double* out) {
  EXCITE_REQUIRE(net && set && out, "net, set and out are required");
  EXCITE_REQUIRE(net->net.size() == set->set.streams.size(), "network and process set sizes differ");
  return guarded([&] { *out = excite::log_likelihood(net->net, set->set).value; });
}

excite_fit_options excite_fit_options_default(void) {
  const excite::GibbsConfig c;
  excite_fit_options o{};
  o.iterations = c.iterations;
  o.burn_in = c.burn_in;
  o.thinning = c.thinning;
  o.lambda0_shape = c.lambda0.shape;
  o.lambda0_rate = c.lambda0.rate;
  o.weight_shape = c.weight.shape;
  o.weight_rate = c.weight.rate;
  o.impulse_concentration = c.impulse_concentration;
  o.seed = c.seed;
  o.basis_edges = nullptr;
  o.n_basis_edges = 0;
  return o;
}

excite_status excite_fit(const excite_process_set* set, const excite_fit_options* options, excite_posterior** out) {
  EXCITE_REQUIRE(set && out, "set and out are required");
  *out = nullptr;
  const excite_fit_options o = options ? *options : excite_fit_options_default();
  EXCITE_REQUIRE(!o.basis_edges || o.n_basis_edges > 0, "basis_edges needs n_basis_edges > 0");
  return guarded([&] {
    if (set->set.streams.size() < 2) throw excite::config_error("fit needs at least two event streams");
    excite::GibbsConfig c;
    c.iterations = o.iterations;
    c.burn_in = o.burn_in;
    c.thinning = o.thinning;
    c.lambda0 = {o.lambda0_shape, o.lambda0_rate};
    c.weight = {o.weight_shape, o.weight_rate};
    c.impulse_concentration = o.impulse_concentration;
    c.seed = o.seed;
    const auto basis = o.basis_edges ? excite::ImpulseBasis::boxcars({o.basis_edges, o.basis_edges + o.n_basis_edges})
                                     : excite::ImpulseBasis::boxcars();
    *out = new excite_posterior{excite::fit(set->set, basis, c)};
  });
}

void excite_posterior_destroy(excite_posterior* posterior) { delete posterior; }

size_t excite_posterior_size(const excite_posterior* posterior) {
  return posterior ? posterior->summary.labels.size() : 0;
}

size_t excite_posterior_samples(const excite_posterior* posterior) {
  return posterior ? posterior->summary.n_samples : 0;
}

double excite_posterior_mean_weight(const excite_posterior* posterior, size_t from, size_t to) {
  const size_t k = excite_posterior_size(posterior);
  if (from >= k || to >= k) return -1.0;
  return posterior->summary.mean_weights(from, to);
}

double excite_posterior_mean_lambda0(const excite_posterior* posterior, size_t process) {
  if (process >= excite_posterior_size(posterior)) return -1.0;
  return posterior->summary.mean_lambda0[process];
}

excite_status excite_posterior_ci90(const excite_posterior* posterior, size_t from, size_t to, double* lower,
                                    double* upper) {
  const size_t k = excite_posterior_size(posterior);
  EXCITE_REQUIRE(lower && upper && from < k && to < k, "bad posterior query");
  *lower = posterior->summary.ci90_lower(from, to);
  *upper = posterior->summary.ci90_upper(from, to);
  return EXCITE_OK;
}

excite_status excite_posterior_write_json(const excite_posterior* posterior, const char* path) {
  EXCITE_REQUIRE(posterior && path, "posterior and path are required");
  return guarded(
      [&] { write_to(path, [&](std::ostream& out) { out << excite::posterior_json(posterior->summary).dump(2) << '\n'; }); });
}

excite_status excite_posterior_write_weights_csv(const excite_posterior* posterior, const char* path) {
  EXCITE_REQUIRE(posterior && path, "posterior and path are required");
  return guarded([&] { write_to(path, [&](std::ostream& out) { excite::write_weight_csv(out, posterior->summary); }); });
}

excite_status excite_posterior_write_heatmap(const excite_posterior* posterior, const char* path, const char* title) {
  EXCITE_REQUIRE(posterior && path, "posterior and path are required");
  return guarded([&] {
    write_to(path, [&](std::ostream& out) {
      excite::write_heatmap_svg(out, posterior->summary, title ? title : "Hawkes weights");
    });
  });
}

}  // extern "C"
