def lower_case(message):
    return ''.join(ch.lower() for ch in message)
