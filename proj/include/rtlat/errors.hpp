#pragma once

#include <stdexcept>
#include <string>

namespace rtlat {

enum class Errc {
    TruncatedPacket,
    BadVersion,
    MalformedExtension,
    ElementIdOutOfRange,
    PayloadTooLarge,
    MtuTooSmall,
    BadPacketType,
    OversizedDatagram,
    SocketUnavailable,
    ConfigError,
    MalformedCsv,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

} // namespace rtlat
