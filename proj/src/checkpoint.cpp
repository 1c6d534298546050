#include "proxyad/checkpoint.hpp"

#include <fstream>
#include <sstream>

namespace proxyad {

namespace {

constexpr const char* kVersionLine = "PROXYAD-CKPT v1";

void write_blob(std::ostream& out, const std::vector<double>& values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

void read_blob(std::istream& in, std::vector<double>& values) {
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw DataError("checkpoint: truncated weight blob");
}

void write_convs(std::ostream& out, const std::vector<Conv2d>& convs) {
  for (const Conv2d& conv : convs) {
    write_blob(out, conv.weight);
    write_blob(out, conv.bias);
  }
}

void read_convs(std::istream& in, std::vector<Conv2d>& convs) {
  for (Conv2d& conv : convs) {
    read_blob(in, conv.weight);
    read_blob(in, conv.bias);
  }
}

struct Header {
  std::string kind;
  MetaMap fields;
};

void write_header(std::ostream& out, const std::string& kind, const MetaMap& fields) {
  out << kVersionLine << " " << kind << "\n";
  for (const auto& [key, value] : fields) {
    out << key << "=" << value << "\n";
  }
  out << "---\n";
}

Header read_header(std::istream& in, const std::string& path) {
  Header header;
  std::string line;
  if (!std::getline(in, line) || line.rfind(kVersionLine, 0) != 0) {
    throw DataError("checkpoint: bad version header in " + path);
  }
  header.kind = line.substr(std::string(kVersionLine).size() + 1);
  while (std::getline(in, line)) {
    if (line == "---") return header;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError("checkpoint: malformed header line in " + path);
    }
    header.fields[line.substr(0, eq)] = line.substr(eq + 1);
  }
  throw DataError("checkpoint: missing header terminator in " + path);
}

int meta_int(const MetaMap& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw DataError("checkpoint: missing field " + key);
  return std::stoi(it->second);
}

MetaMap encoder_fields(const std::string& prefix, const EncoderSpec& spec) {
  return {{prefix + ".in_channels", std::to_string(spec.in_channels)},
          {prefix + ".base_channels", std::to_string(spec.base_channels)},
          {prefix + ".n_downsamples", std::to_string(spec.n_downsamples)},
          {prefix + ".latent_dim", std::to_string(spec.latent_dim)}};
}

EncoderSpec encoder_from_fields(const std::string& prefix, const MetaMap& fields) {
  return {meta_int(fields, prefix + ".in_channels"),
          meta_int(fields, prefix + ".base_channels"),
          meta_int(fields, prefix + ".n_downsamples"),
          meta_int(fields, prefix + ".latent_dim")};
}

MetaMap decoder_fields(const std::string& prefix, const DecoderSpec& spec) {
  return {{prefix + ".out_channels", std::to_string(spec.out_channels)},
          {prefix + ".base_channels", std::to_string(spec.base_channels)},
          {prefix + ".n_upsamples", std::to_string(spec.n_upsamples)},
          {prefix + ".latent_dim", std::to_string(spec.latent_dim)}};
}

DecoderSpec decoder_from_fields(const std::string& prefix, const MetaMap& fields) {
  return {meta_int(fields, prefix + ".out_channels"),
          meta_int(fields, prefix + ".base_channels"),
          meta_int(fields, prefix + ".n_upsamples"),
          meta_int(fields, prefix + ".latent_dim")};
}

// User metadata is namespaced to keep it apart from spec fields.
void merge_meta(MetaMap& fields, const MetaMap& meta) {
  for (const auto& [key, value] : meta) fields["meta." + key] = value;
}

MetaMap extract_meta(const MetaMap& fields) {
  MetaMap meta;
  for (const auto& [key, value] : fields) {
    if (key.rfind("meta.", 0) == 0) meta[key.substr(5)] = value;
  }
  return meta;
}

}  // namespace

void save_pem_checkpoint(const std::string& path, const ProxyExtractionModule& pem,
                         const MetaMap& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);

  MetaMap fields = encoder_fields("enc", pem.enc.spec);
  fields.merge(decoder_fields("dec", pem.dec.spec));
  fields["use_memory"] = pem.use_memory ? "1" : "0";
  if (pem.use_memory) {
    fields["bank.k"] = std::to_string(pem.bank.k());
    fields["bank.d"] = std::to_string(pem.bank.d());
  }
  merge_meta(fields, meta);
  write_header(out, "pem", fields);
  write_convs(out, pem.enc.convs);
  write_convs(out, pem.dec.convs);
  if (pem.use_memory) pem.bank.save(out);
  if (!out) throw DataError("checkpoint write failed: " + path);
}

PemCheckpoint load_pem_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  const Header header = read_header(in, path);
  if (header.kind != "pem") throw DataError("checkpoint kind mismatch in " + path);

  PemCheckpoint out;
  out.pem.enc = Encoder(encoder_from_fields("enc", header.fields), 0);
  out.pem.dec = Decoder(decoder_from_fields("dec", header.fields), 0);
  out.pem.use_memory = meta_int(header.fields, "use_memory") != 0;
  read_convs(in, out.pem.enc.convs);
  read_convs(in, out.pem.dec.convs);
  if (out.pem.use_memory) out.pem.bank = MemoryBank::load(in);
  out.meta = extract_meta(header.fields);
  return out;
}

void save_irm_checkpoint(const std::string& path, const ImageReconstructionModule& irm,
                         const Discriminator& disc, const MetaMap& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);

  MetaMap fields = encoder_fields("enc", irm.enc.spec);
  fields.merge(decoder_fields("dec", irm.dec.spec));
  fields["disc.in_channels"] = std::to_string(disc.spec.in_channels);
  fields["disc.base_channels"] = std::to_string(disc.spec.base_channels);
  fields["disc.n_layers"] = std::to_string(disc.spec.n_layers);
  merge_meta(fields, meta);
  write_header(out, "irm", fields);
  write_convs(out, irm.enc.convs);
  write_convs(out, irm.dec.convs);
  write_convs(out, disc.convs);
  if (!out) throw DataError("checkpoint write failed: " + path);
}

IrmCheckpoint load_irm_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  const Header header = read_header(in, path);
  if (header.kind != "irm") throw DataError("checkpoint kind mismatch in " + path);

  IrmCheckpoint out;
  out.irm.enc = Encoder(encoder_from_fields("enc", header.fields), 0);
  out.irm.dec = Decoder(decoder_from_fields("dec", header.fields), 0);
  out.disc = Discriminator({meta_int(header.fields, "disc.in_channels"),
                            meta_int(header.fields, "disc.base_channels"),
                            meta_int(header.fields, "disc.n_layers")},
                           0);
  read_convs(in, out.irm.enc.convs);
  read_convs(in, out.irm.dec.convs);
  read_convs(in, out.disc.convs);
  out.meta = extract_meta(header.fields);
  return out;
}

}  // namespace proxyad
