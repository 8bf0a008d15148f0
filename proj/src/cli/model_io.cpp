#include "repden/cli/model_io.hpp"

#include "repden/cli/csv.hpp"

#include <chrono>
#include <ctime>
#include <fstream>

namespace repden::cli {

using nlohmann::json;

namespace {

json vec(const Eigen::VectorXd& v)
{
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

// Row-major nested arrays.
json rows(const Eigen::MatrixXd& m)
{
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    out.push_back(vec(m.row(i).transpose()));
  return out;
}

Eigen::VectorXd to_vec(const json& j, Eigen::Index expect, const char* what)
{
  const auto v = j.get<std::vector<double>>();
  if (expect >= 0 && static_cast<Eigen::Index>(v.size()) != expect)
    throw IoError(std::string("model file: '") + what + "' has the wrong length");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd to_rows(const json& j, Eigen::Index cols, const char* what)
{
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = to_vec(j[i], cols, what).transpose();
  return m;
}

} // namespace

json model_to_json(const ModelFile& mf)
{
  const auto& sys = mf.model.sys();
  const Domain& d = sys.domain();
  const auto& meta = mf.model.meta();
  json j;
  j["format_version"] = ModelFile::kFormatVersion;
  j["domain"] = {{"lo", d.lo()}, {"hi", d.hi()}, {"n_grid", d.size()}};
  j["mu"] = vec(sys.mu.values());
  j["eigvals"] = vec(sys.eigvals);
  j["eigfns"] = rows(sys.eigfns.transpose());
  j["scores"] = rows(sys.scores);
  j["presmoothed"] = rows(mf.model.presmoothed());
  j["bandwidth"] = meta.bandwidth;
  j["log_scale"] = mf.log_scale;
  j["delta"] = mf.delta;
  j["generalized_lower"] = mf.generalized_lower;
  j["provenance"] = {{"n", meta.ids.size()},
                     {"ids", meta.ids},
                     {"sizes", meta.sizes},
                     {"excluded", mf.provenance.excluded},
                     {"seed", mf.provenance.seed},
                     {"timestamp", mf.provenance.timestamp}};
  return j;
}

ModelFile model_from_json(const json& j)
{
  try {
    const int version = j.at("format_version").get<int>();
    if (version != ModelFile::kFormatVersion)
      throw IoError("model file: unsupported format_version " + std::to_string(version));
    const json& jd = j.at("domain");
    const Domain d(jd.at("lo").get<double>(), jd.at("hi").get<double>(),
                   jd.at("n_grid").get<std::size_t>());
    const auto m = static_cast<Eigen::Index>(d.size());

    EigenSystem sys{LogDensityFn(GridFn(d, to_vec(j.at("mu"), m, "mu"))),
                    to_vec(j.at("eigvals"), -1, "eigvals"), {}, {}};
    const auto k = sys.eigvals.size();
    sys.eigfns = to_rows(j.at("eigfns"), m, "eigfns").transpose();
    if (sys.eigfns.cols() != k)
      throw IoError("model file: eigfns and eigvals disagree");
    sys.scores = to_rows(j.at("scores"), k, "scores");
    Eigen::MatrixXd pre = to_rows(j.at("presmoothed"), m, "presmoothed");

    const json& jp = j.at("provenance");
    TrainingMeta meta;
    meta.ids = jp.at("ids").get<std::vector<std::string>>();
    meta.sizes = jp.at("sizes").get<std::vector<std::size_t>>();
    meta.bandwidth = j.at("bandwidth").get<double>();

    Provenance prov;
    prov.excluded = jp.at("excluded").get<std::vector<std::string>>();
    prov.seed = jp.at("seed").get<std::uint64_t>();
    prov.timestamp = jp.at("timestamp").get<std::string>();

    return ModelFile{FamilyModel(std::move(sys), std::move(pre), std::move(meta)),
                     j.at("log_scale").get<bool>(), j.at("delta").get<double>(),
                     j.at("generalized_lower").get<bool>(), std::move(prov)};
  } catch (const json::exception& e) {
    throw IoError(std::string("model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& mf)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << model_to_json(mf).dump(1) << '\n';
  if (!out)
    throw IoError("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

std::string utc_timestamp()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

} // namespace repden::cli
