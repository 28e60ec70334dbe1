#include "rtlat/errors.hpp"

namespace rtlat {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::TruncatedPacket: return "TruncatedPacket";
    case Errc::BadVersion: return "BadVersion";
    case Errc::MalformedExtension: return "MalformedExtension";
    case Errc::ElementIdOutOfRange: return "ElementIdOutOfRange";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::MtuTooSmall: return "MtuTooSmall";
    case Errc::BadPacketType: return "BadPacketType";
    case Errc::OversizedDatagram: return "OversizedDatagram";
    case Errc::SocketUnavailable: return "SocketUnavailable";
    case Errc::ConfigError: return "ConfigError";
    case Errc::MalformedCsv: return "MalformedCsv";
    }
    return "Error";
}

} // namespace rtlat
