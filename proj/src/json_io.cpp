#include "lrkkt/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lrkkt {

namespace {

using nlohmann::json;

json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VectorXd vec_from_json(const json& a) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

/// Bounds serialize infinities as null.
json bound_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isinf(v[i]))
      a.push_back(nullptr);
    else
      a.push_back(v[i]);
  }
  return a;
}

VectorXd bound_from_json(const json& a, double inf_sign) {
  VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        a[i].is_null() ? inf_sign * kInf : a[i].get<double>();
  return v;
}

json mat_to_json(const MatrixXd& M) {
  json a = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    a.push_back(row);
  }
  return a;
}

MatrixXd mat_from_json(const json& a, Eigen::Index cols_hint) {
  const Eigen::Index rows = static_cast<Eigen::Index>(a.size());
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(a[0].size()) : cols_hint;
  MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      M(i, j) = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
  return M;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json state_to_json(const IterateState& st) {
  json j;
  j["y"] = vec_to_json(st.y);
  j["w"] = vec_to_json(st.w);
  j["x"] = vec_to_json(st.x);
  j["sigma"] = st.sigma;
  j["s"] = vec_to_json(st.s);
  j["z"] = vec_to_json(st.z);
  j["zeta"] = st.zeta;
  j["s_alo"] = vec_to_json(st.s_alo);
  j["s_ahi"] = vec_to_json(st.s_ahi);
  j["s_ylo"] = vec_to_json(st.s_ylo);
  j["s_yhi"] = vec_to_json(st.s_yhi);
  j["mu"] = st.mu;
  return j;
}

IterateState state_from_json(const json& j) {
  IterateState st;
  st.y = vec_from_json(j.at("y"));
  st.w = vec_from_json(j.at("w"));
  st.x = vec_from_json(j.at("x"));
  st.sigma = j.at("sigma").get<double>();
  st.s = vec_from_json(j.at("s"));
  st.z = vec_from_json(j.at("z"));
  st.zeta = j.at("zeta").get<double>();
  st.s_alo = vec_from_json(j.at("s_alo"));
  st.s_ahi = vec_from_json(j.at("s_ahi"));
  st.s_ylo = vec_from_json(j.at("s_ylo"));
  st.s_yhi = vec_from_json(j.at("s_yhi"));
  st.mu = j.at("mu").get<double>();
  return st;
}

}  // namespace

std::string instance_to_json(const SubproblemData& data) {
  json j;
  j["m"] = data.m;
  j["D_H"] = vec_to_json(data.prox_diag);
  j["V_H"] = mat_to_json(data.prox_lowrank);
  j["b"] = vec_to_json(data.b);
  j["delta"] = data.offset;
  j["cone"] = {{"n", data.cone.nonneg_dim},
               {"q", data.cone.soc_dims},
               {"s", data.cone.psd_dims}};
  j["B0"] = vec_to_json(data.B0);
  if (!data.B.has_dense())
    throw std::invalid_argument("instance_to_json: oracle-backed B cannot be serialized");
  j["B"] = mat_to_json(data.B.dense());
  j["A"] = mat_to_json(data.A);
  j["a_lo"] = bound_to_json(data.a_lo);
  j["a_hi"] = bound_to_json(data.a_hi);
  j["y_lo"] = bound_to_json(data.y_lo);
  j["y_hi"] = bound_to_json(data.y_hi);
  j["tau"] = data.tau;
  j["trace_mode"] = data.trace_mode == TraceMode::EQUALITY ? "EQUALITY" : "UPPER_BOUND";
  return j.dump(1);
}

SubproblemData instance_from_json(const std::string& text) {
  const json j = json::parse(text);
  SubproblemData data;
  data.m = j.at("m").get<int>();
  data.prox_diag = vec_from_json(j.at("D_H"));
  data.prox_lowrank = mat_from_json(j.at("V_H"), data.m);
  if (data.prox_lowrank.size() == 0) data.prox_lowrank.resize(data.m, 0);
  data.b = vec_from_json(j.at("b"));
  data.offset = j.at("delta").get<double>();
  data.cone.nonneg_dim = j.at("cone").at("n").get<int>();
  data.cone.soc_dims = j.at("cone").at("q").get<std::vector<int>>();
  data.cone.psd_dims = j.at("cone").at("s").get<std::vector<int>>();
  data.B0 = vec_from_json(j.at("B0"));
  data.B = LinearMap(mat_from_json(j.at("B"), data.m));
  MatrixXd A = mat_from_json(j.at("A"), data.m);
  if (A.size() == 0) A.resize(0, data.m);
  data.A = A;
  data.a_lo = bound_from_json(j.at("a_lo"), -1.0);
  data.a_hi = bound_from_json(j.at("a_hi"), +1.0);
  data.y_lo = bound_from_json(j.at("y_lo"), -1.0);
  data.y_hi = bound_from_json(j.at("y_hi"), +1.0);
  data.tau = j.at("tau").get<double>();
  data.trace_mode = j.at("trace_mode").get<std::string>() == "EQUALITY"
                        ? TraceMode::EQUALITY
                        : TraceMode::UPPER_BOUND;
  data.validate();
  return data;
}

void save_instance(const SubproblemData& data, const std::string& path) {
  write_file(path, instance_to_json(data));
}

SubproblemData load_instance(const std::string& path) {
  return instance_from_json(read_file(path));
}

namespace {

json snapshot_to_json(const KKTSnapshot& snap) {
  json j;
  j["index"] = snap.index;
  j["mu"] = snap.mu;
  j["state"] = state_to_json(snap.state);
  j["rhs"] = {{"r_y", vec_to_json(snap.rhs.r_y)},
              {"r_s", vec_to_json(snap.rhs.r_s)},
              {"r_x", vec_to_json(snap.rhs.r_x)},
              {"r_zeta", snap.rhs.r_zeta}};
  j["ds_solution"] = vec_to_json(snap.ds_solution);
  return j;
}

KKTSnapshot snapshot_from_json(const json& j) {
  KKTSnapshot snap;
  snap.index = j.at("index").get<int>();
  snap.mu = j.at("mu").get<double>();
  snap.state = state_from_json(j.at("state"));
  snap.rhs.r_y = vec_from_json(j.at("rhs").at("r_y"));
  snap.rhs.r_s = vec_from_json(j.at("rhs").at("r_s"));
  snap.rhs.r_x = vec_from_json(j.at("rhs").at("r_x"));
  snap.rhs.r_zeta = j.at("rhs").at("r_zeta").get<double>();
  snap.ds_solution = vec_from_json(j.at("ds_solution"));
  return snap;
}

std::string snapshot_name(int i) {
  std::ostringstream ss;
  ss << "snapshot_" << std::setw(4) << std::setfill('0') << i << ".json";
  return ss.str();
}

}  // namespace

void save_trace(const SubproblemData& data, const std::vector<KKTSnapshot>& trace,
                const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_instance(data, (fs::path(dir) / "instance.json").string());
  json manifest;
  manifest["instance"] = "instance.json";
  manifest["count"] = trace.size();
  json names = json::array();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const std::string name = snapshot_name(static_cast<int>(i));
    write_file((fs::path(dir) / name).string(), snapshot_to_json(trace[i]).dump(1));
    names.push_back(name);
  }
  manifest["snapshots"] = names;
  write_file((fs::path(dir) / "manifest.json").string(), manifest.dump(1));
}

LoadedTrace load_trace(const std::string& dir) {
  namespace fs = std::filesystem;
  const json manifest = json::parse(read_file((fs::path(dir) / "manifest.json").string()));
  LoadedTrace out;
  out.data = load_instance(
      (fs::path(dir) / manifest.at("instance").get<std::string>()).string());
  for (const auto& name : manifest.at("snapshots")) {
    out.trace.push_back(snapshot_from_json(
        json::parse(read_file((fs::path(dir) / name.get<std::string>()).string()))));
  }
  return out;
}

}  // namespace lrkkt
