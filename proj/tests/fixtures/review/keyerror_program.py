import requests

headers = {"Authorization": "YOUR API KEY"}


# api_path: /3/person/{person_id}/movie_credits
def get_person_movie_credits(person_id: int):
    url = f"https://api.themoviedb.org/3/person/{person_id}/movie_credits"
    response = requests.get(url, headers=headers)
    response.raise_for_status()
    return response.json()


def count_directed(person_id: int) -> int:
    credits = get_person_movie_credits(person_id)
    directed = [
        movie for movie in credits["credits"]
        if movie["job"] == "Director"
    ]
    return len(directed)


if __name__ == "__main__":
    print("Number of movies directed by Sofia Coppola:", count_directed(1769))
