def user_calls(client, data):
    client.send_payload(data)
    return client.response_code
