#include "botgraph/pcap.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "botgraph/errors.hpp"
#include "botgraph/util.hpp"

namespace botgraph {

namespace {
constexpr uint32_t kMagicUs = 0xa1b2c3d4u;
constexpr uint32_t kMagicNs = 0xa1b23c4du;
constexpr uint32_t kMagicUsSwapped = 0xd4c3b2a1u;
constexpr uint32_t kMagicNsSwapped = 0x4d3cb2a1u;
constexpr uint32_t kMagicPcapNg = 0x0a0d0d0au;
constexpr uint32_t kLinkEthernet = 1;
constexpr uint16_t kEthertypeIpv4 = 0x0800;
constexpr size_t kGlobalHeaderLen = 24;
constexpr size_t kRecordHeaderLen = 16;
constexpr size_t kEthernetHeaderLen = 14;

uint32_t bswap32(uint32_t v) { return __builtin_bswap32(v); }
}  // namespace

uint32_t PcapReader::load_u32(const unsigned char* p) const {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return swap_ ? bswap32(v) : v;
}

uint16_t PcapReader::load_u16be(const unsigned char* p) const {
  return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

PcapReader::PcapReader(const std::string& path)
    : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw InputError("cannot open pcap: " + path);

  unsigned char hdr[kGlobalHeaderLen];
  in_.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (in_.gcount() != static_cast<std::streamsize>(sizeof(hdr)))
    throw InputError(path + ": truncated global header");
  offset_ = kGlobalHeaderLen;

  uint32_t magic;
  std::memcpy(&magic, hdr, 4);
  switch (magic) {
    case kMagicUs: swap_ = false; ts_scale_ = 1e-6; break;
    case kMagicNs: swap_ = false; ts_scale_ = 1e-9; break;
    case kMagicUsSwapped: swap_ = true; ts_scale_ = 1e-6; break;
    case kMagicNsSwapped: swap_ = true; ts_scale_ = 1e-9; break;
    case kMagicPcapNg:
      throw InputError(path + ": pcap-ng unsupported (classic pcap only)");
    default:
      throw InputError(strfmt("%s: bad pcap magic 0x%08x", path.c_str(), magic));
  }

  uint32_t link_type = load_u32(hdr + 20);
  if (link_type != kLinkEthernet)
    throw InputError(strfmt("%s: unsupported link type %u (Ethernet only)",
                            path.c_str(), link_type));
}

std::optional<PacketEvent> PcapReader::next() {
  unsigned char rec[kRecordHeaderLen];
  std::vector<unsigned char> frame;

  while (true) {
    in_.read(reinterpret_cast<char*>(rec), sizeof(rec));
    std::streamsize got = in_.gcount();
    if (got == 0 && in_.eof()) return std::nullopt;
    if (got != static_cast<std::streamsize>(sizeof(rec)))
      throw InputError(strfmt("%s: truncated record header at byte %llu", path_.c_str(),
                              static_cast<unsigned long long>(offset_)));

    uint32_t ts_sec = load_u32(rec);
    uint32_t ts_sub = load_u32(rec + 4);
    uint32_t incl_len = load_u32(rec + 8);
    uint64_t record_off = offset_;
    offset_ += kRecordHeaderLen;

    frame.resize(incl_len);
    if (incl_len > 0) {
      in_.read(reinterpret_cast<char*>(frame.data()), incl_len);
      if (in_.gcount() != static_cast<std::streamsize>(incl_len))
        throw InputError(strfmt("%s: truncated packet data at byte %llu (need %u bytes)",
                                path_.c_str(), static_cast<unsigned long long>(offset_),
                                incl_len));
      offset_ += incl_len;
    }

    double abs_ts = static_cast<double>(ts_sec) + static_cast<double>(ts_sub) * ts_scale_;
    if (!have_base_) {
      base_ts_ = abs_ts;  // capture start = first record, whatever its type
      have_base_ = true;
    }
    double t = abs_ts - base_ts_;
    if (t < last_t_)
      throw InputError(strfmt("%s: timestamp regression in record at byte %llu", path_.c_str(),
                              static_cast<unsigned long long>(record_off)));

    // Ethernet -> IPv4 only; everything else (ARP, IPv6, VLAN, short
    // frames) is counted and skipped.
    if (incl_len < kEthernetHeaderLen + 20 ||
        load_u16be(frame.data() + 12) != kEthertypeIpv4 ||
        (frame[kEthernetHeaderLen] >> 4) != 4) {
      ++meta_.skipped_non_ipv4;
      last_t_ = t;
      continue;
    }

    const unsigned char* ip = frame.data() + kEthernetHeaderLen;
    uint32_t src = (uint32_t(ip[12]) << 24) | (uint32_t(ip[13]) << 16) |
                   (uint32_t(ip[14]) << 8) | uint32_t(ip[15]);
    uint32_t dst = (uint32_t(ip[16]) << 24) | (uint32_t(ip[17]) << 16) |
                   (uint32_t(ip[18]) << 8) | uint32_t(ip[19]);

    last_t_ = t;
    uint32_t orig_len = load_u32(rec + 12);
    PacketEvent ev{t, src, dst, orig_len};
    ++meta_.event_count;
    meta_.duration_s = std::max(meta_.duration_s, t);
    hosts_.insert(src);
    hosts_.insert(dst);
    meta_.host_count = hosts_.size();
    return ev;
  }
}

}  // namespace botgraph
